//! Crank–Nicolson time stepping of the forward (Fokker–Planck) equation.
//!
//! For a reversible process the forward equation is
//! `∂p/∂t = ∂ₓ(π V ∂ₓ(p/π))`, so with `u = p/π` and `v = √π u` the
//! semi-discrete system is `v' = −S v` with the same symmetric tridiagonal
//! `S` as the eigenproblem. Zero-flux ends conserve `Σ pᵢ h` exactly.

use serde::{Deserialize, Serialize};

use super::{discretize_generator, DiscreteGenerator};
use crate::error::{Error, Result};
use crate::numerics::{fit_exponential_decay, Grid, GridFunction, RateEstimate};
use crate::optimal::Diffusion;

/// Negative densities below this abort the evolution.
const NEGATIVITY_FLOOR: f64 = -1e-10;

/// A density on a cell-centred grid at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub density: GridFunction,
    pub time: f64,
}

impl EvolutionState {
    /// Normalizes `values` so that `Σ pᵢ h = 1`.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidInput(format!("negative or NaN density at index {i}")));
        }
        let mass: f64 = values.iter().sum::<f64>() * grid.spacing();
        if !(mass > 0.0) {
            return Err(Error::InvalidInput("initial density has zero mass".into()));
        }
        let values = values.into_iter().map(|v| v / mass).collect();
        Ok(EvolutionState {
            density: GridFunction::new(grid, values)?,
            time: 0.0,
        })
    }

    /// A Gaussian bump of width `width` centred at `center`.
    pub fn bump(grid: Grid, center: f64, width: f64) -> Result<Self> {
        let values = grid
            .points()
            .iter()
            .map(|&x| (-0.5 * ((x - center) / width).powi(2)).exp())
            .collect();
        Self::new(grid, values)
    }

    /// The stationary density of `process` sampled on `grid`.
    pub fn stationary(process: &dyn Diffusion, grid: Grid) -> Result<Self> {
        let values = grid.points().iter().map(|&x| process.stationary_density(x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        self.density.grid()
    }

    /// `Σ pᵢ h`.
    pub fn mass(&self) -> f64 {
        self.density.values().iter().sum::<f64>() * self.grid().spacing()
    }
}

/// `d(t) = ‖p(t) − π‖_{L¹}` at every step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecayLog {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// Largest `|Σ pᵢ h − 1|` seen.
    pub max_mass_error: f64,
}

impl DecayLog {
    /// Fits `ln d(t)` where `d ∈ [1e−6, 0.1·d(0)]`.
    pub fn fit_rate(&self) -> Result<RateEstimate> {
        self.fit_rate_within(1e-6, 0.1)
    }

    /// Fits `ln d(t)` where `floor ≤ d ≤ fraction·d(0)`.
    pub fn fit_rate_within(&self, floor: f64, fraction: f64) -> Result<RateEstimate> {
        let Some(&d0) = self.distances.first() else {
            return Err(Error::InvalidInput("empty decay log".into()));
        };
        let (t, d): (Vec<f64>, Vec<f64>) = self
            .times
            .iter()
            .zip(&self.distances)
            .filter(|(_, &d)| d >= floor && d <= fraction * d0)
            .map(|(&t, &d)| (t, d))
            .unzip();
        fit_exponential_decay(&t, &d)
    }
}

/// Solves `(I + c S) x = rhs` for the symmetric tridiagonal `S` (Thomas).
fn solve_shifted(s: &DiscreteGenerator, c: f64, rhs: &[f64], scratch: &mut [f64], out: &mut [f64]) {
    let n = rhs.len();
    let b = |i: usize| 1.0 + c * s.diag[i];
    let e = |i: usize| c * s.offdiag[i];
    let mut denom = b(0);
    scratch[0] = if n > 1 { e(0) / denom } else { 0.0 };
    out[0] = rhs[0] / denom;
    for i in 1..n {
        denom = b(i) - e(i - 1) * scratch[i - 1];
        if i + 1 < n {
            scratch[i] = e(i) / denom;
        }
        out[i] = (rhs[i] - e(i - 1) * out[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        out[i] -= scratch[i] * out[i + 1];
    }
}

/// `out = (I − c S) v`.
fn apply_shifted(s: &DiscreteGenerator, c: f64, v: &[f64], out: &mut [f64]) {
    let n = v.len();
    for i in 0..n {
        let mut acc = (1.0 - c * s.diag[i]) * v[i];
        if i > 0 {
            acc -= c * s.offdiag[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            acc -= c * s.offdiag[i] * v[i + 1];
        }
        out[i] = acc;
    }
}

/// Evolves `initial` to `t_end` with step `dt`. The first step is replaced
/// by four backward-Euler quarter steps to damp the non-smooth start.
pub fn evolve_fpe(
    process: &dyn Diffusion,
    initial: EvolutionState,
    t_end: f64,
    dt: f64,
) -> Result<(EvolutionState, DecayLog)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    if !(t_end >= initial.time) {
        return Err(Error::InvalidInput(format!(
            "end time {t_end} precedes start time {}",
            initial.time
        )));
    }
    let grid = initial.grid().clone();
    let h = grid.spacing();
    let s = discretize_generator(process, &grid)?;
    let n = grid.len();
    let sqrt_pi: Vec<f64> = s.density.iter().map(|p| p.sqrt()).collect();
    let pi_mass: f64 = s.density.iter().sum::<f64>() * h;
    let target: Vec<f64> = s.density.iter().map(|p| p / pi_mass).collect();

    let mut v: Vec<f64> = initial
        .density
        .values()
        .iter()
        .zip(&sqrt_pi)
        .map(|(p, r)| p / r)
        .collect();
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut density = initial.density.values().to_vec();
    let mut time = initial.time;
    let mut log = DecayLog::default();

    let record = |density: &[f64], time: f64, log: &mut DecayLog| {
        let d = density.iter().zip(&target).map(|(p, q)| (p - q).abs()).sum::<f64>() * h;
        let mass = density.iter().sum::<f64>() * h;
        log.times.push(time);
        log.distances.push(d);
        log.max_mass_error = log.max_mass_error.max((mass - 1.0).abs());
    };
    record(&density, time, &mut log);

    let steps = ((t_end - initial.time) / dt).round() as usize;
    for step in 0..steps {
        if step == 0 {
            for _ in 0..4 {
                solve_shifted(&s, 0.25 * dt, &v, &mut scratch, &mut next);
                std::mem::swap(&mut v, &mut next);
            }
        } else {
            apply_shifted(&s, 0.5 * dt, &v, &mut rhs);
            solve_shifted(&s, 0.5 * dt, &rhs, &mut scratch, &mut next);
            std::mem::swap(&mut v, &mut next);
        }
        time = initial.time + (step + 1) as f64 * dt;
        for i in 0..n {
            density[i] = v[i] * sqrt_pi[i];
        }
        if let Some(&worst) = density.iter().find(|p| !p.is_finite() || **p < NEGATIVITY_FLOOR) {
            return Err(Error::UnstableStep { time, value: worst });
        }
        record(&density, time, &mut log);
    }
    Ok((
        EvolutionState {
            density: GridFunction::new(grid, density)?,
            time,
        },
        log,
    ))
}
