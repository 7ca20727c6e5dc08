//! One-dimensional grids, tabulated functions and monotone cubic (PCHIP)
//! interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Uniform,
    Custom,
}

/// Strictly increasing abscissae, at least three of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
    kind: GridKind,
}

impl Grid {
    pub fn new(points: Vec<f64>, kind: GridKind) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidGrid(format!(
                "{} points, need at least 3",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("non-finite abscissa".into()));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "points not strictly increasing at index {i}"
            )));
        }
        if kind == GridKind::Uniform {
            let h = (points[points.len() - 1] - points[0]) / (points.len() - 1) as f64;
            let span = points[points.len() - 1].abs().max(points[0].abs()).max(h);
            let bad = points.windows(2).any(|w| {
                ((w[1] - w[0]) - h).abs() > 1e-12 * span.max(h)
                    && ((w[1] - w[0]) / h - 1.0).abs() > 1e-12
            });
            if bad {
                return Err(Error::InvalidGrid("spacing is not uniform".into()));
            }
        }
        Ok(Grid { points, kind })
    }

    /// `n` equally spaced points from `a` to `b` inclusive.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("{n} points, need at least 3")));
        }
        let h = (b - a) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
        points[n - 1] = b;
        Ok(Grid {
            points,
            kind: GridKind::Uniform,
        })
    }

    /// `n` cell centres of a uniform partition of `[a, b]`.
    pub fn cell_centered(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("{n} points, need at least 3")));
        }
        let h = (b - a) / n as f64;
        Ok(Grid {
            points: (0..n).map(|i| a + (i as f64 + 0.5) * h).collect(),
            kind: GridKind::Uniform,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Mean spacing; the exact spacing for uniform grids.
    pub fn spacing(&self) -> f64 {
        (self.last() - self.first()) / (self.len() - 1) as f64
    }

    /// Index `i` with `points[i] <= x <= points[i+1]`, clamped to the ends.
    pub fn locate(&self, x: f64) -> usize {
        let n = self.points.len();
        match self.points.partition_point(|&p| p <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }
}

/// A function tabulated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at index {i}")));
        }
        Ok(GridFunction { grid, values })
    }

    /// Tabulates `f` on `grid`.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Piecewise-linear interpolation, clamped outside the grid.
    pub fn linear(&self, x: f64) -> f64 {
        let xs = self.grid.points();
        if x <= xs[0] {
            return self.values[0];
        }
        if x >= xs[xs.len() - 1] {
            return self.values[xs.len() - 1];
        }
        let i = self.grid.locate(x);
        let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

impl Pchip {
    pub fn new(f: &GridFunction) -> Self {
        let x = f.grid().points().to_vec();
        let y = f.values().to_vec();
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let m: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if m[i - 1] * m[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / m[i - 1] + w2 / m[i]);
            }
        }
        d[0] = end_slope(h[0], h[1], m[0], m[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
        Pchip { x, y, d }
    }

    pub fn lower(&self) -> f64 {
        self.x[0]
    }

    pub fn upper(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Node abscissae.
    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    /// Evaluates the interpolant; constant extrapolation outside the nodes.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = match self.x.partition_point(|&p| p <= t) {
            0 => 0,
            k => (k - 1).min(n - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}
