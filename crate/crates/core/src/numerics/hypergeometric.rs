//! Generalized hypergeometric series ₂F₁, ₁F₁ and terminating ₂F₀.
//!
//! Terms are generated by the ratio recurrence and accumulated with
//! Neumaier compensated summation. A series stops once two successive terms
//! fall below `1e-15·|partial sum|`, when it terminates exactly, or when the
//! term budget is spent.

use crate::error::{Error, Result};

/// Maximum number of series terms.
pub const TERM_BUDGET: usize = 10_000;
const REL_STOP: f64 = 1e-15;

/// Rising factorial `(x)_n = x(x+1)…(x+n−1)`, with `(x)_0 = 1`.
pub fn pochhammer(x: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (x + k as f64))
}

fn nonpositive_integer(x: f64) -> Option<usize> {
    (x <= 0.0 && x.fract() == 0.0 && x.is_finite()).then(|| (-x) as usize)
}

/// Degree of the polynomial if either upper parameter is a nonpositive integer.
fn termination(a: &[f64]) -> Option<usize> {
    a.iter().filter_map(|&p| nonpositive_integer(p)).min()
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    compensation: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Sums `Σ_r Π(upper_i)_r z^r / (Π(lower_j)_r r!)`.
fn series(upper: &[f64], lower: &[f64], z: f64) -> f64 {
    let mut acc = Neumaier::default();
    let mut term = 1.0;
    acc.add(term);
    let mut small_run = 0;
    for r in 0..TERM_BUDGET {
        let rf = r as f64;
        let num: f64 = upper.iter().map(|p| p + rf).product();
        let den: f64 = lower.iter().map(|q| q + rf).product::<f64>() * (rf + 1.0);
        term *= num / den * z;
        if term == 0.0 {
            break;
        }
        acc.add(term);
        if term.abs() < REL_STOP * acc.value().abs() {
            small_run += 1;
            if small_run >= 2 {
                break;
            }
        } else {
            small_run = 0;
        }
    }
    acc.value()
}

/// Gauss hypergeometric function ₂F₁(a, b; c; z).
///
/// Requires `|z| < 1` unless `a` or `b` is a nonpositive integer, in which
/// case the series is a polynomial and any `z` is accepted.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if nonpositive_integer(c).is_some() {
        return Err(Error::PoleAtC(c));
    }
    if z.is_nan() || a.is_nan() || b.is_nan() || c.is_nan() {
        return Err(Error::InvalidInput("NaN argument to hyp2f1".into()));
    }
    if termination(&[a, b]).is_none() && z.abs() >= 1.0 {
        return Err(Error::SeriesDivergence(z.abs()));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    Ok(series(&[a, b], &[c], z))
}

/// Kummer's confluent hypergeometric function ₁F₁(a; c; z).
pub fn hyp1f1(a: f64, c: f64, z: f64) -> Result<f64> {
    if nonpositive_integer(c).is_some() {
        return Err(Error::PoleAtC(c));
    }
    if z.is_nan() || a.is_nan() || c.is_nan() {
        return Err(Error::InvalidInput("NaN argument to hyp1f1".into()));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    Ok(series(&[a], &[c], z))
}

/// ₂F₀(a, b; ; z), which only exists as a polynomial: one of `a`, `b` must
/// be a nonpositive integer.
pub fn hyp2f0_terminating(a: f64, b: f64, z: f64) -> Result<f64> {
    if termination(&[a, b]).is_none() {
        return Err(Error::SeriesDivergence(z.abs()));
    }
    Ok(series(&[a, b], &[], z))
}
