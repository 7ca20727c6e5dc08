//! Finite-volume discretization of the Sturm–Liouville operator
//! `L φ = −(1/π) (π V φ')'` with zero-flux ends, its low spectrum, Rayleigh
//! quotients and Crank–Nicolson evolution of the forward equation.

mod evolve;

pub use evolve::{evolve_fpe, DecayLog, EvolutionState};

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionKind, DistributionSpec};
use crate::error::{Error, Result};
use crate::numerics::{tridiag_eigs, Grid, GridFunction, GridKind};
use crate::optimal::{Diffusion, ExplicitDiffusion, OptimalProcess};

/// Fewest grid points accepted by [`discretize_generator`].
pub const MIN_GRID_POINTS: usize = 50;

/// The generator in symmetric tridiagonal form `S = P^{1/2} A P^{−1/2}`,
/// where `A` is the finite-volume operator and `P = diag(πᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGenerator {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    /// `√(πᵢ h)`; eigenvectors of `S` divided by these are π-orthonormal.
    pub weights: Vec<f64>,
    /// `πᵢ` at the cell centres.
    pub density: Vec<f64>,
    /// `π V` averaged onto the interior faces.
    pub face_coefficients: Vec<f64>,
    pub grid: Grid,
}

impl DiscreteGenerator {
    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }
}

/// Assembles the generator on the cell centres `grid`.
pub fn discretize_generator(process: &dyn Diffusion, grid: &Grid) -> Result<DiscreteGenerator> {
    let n = grid.len();
    if n < MIN_GRID_POINTS {
        return Err(Error::GridTooCoarse(n, MIN_GRID_POINTS));
    }
    if grid.kind() != GridKind::Uniform {
        return Err(Error::InvalidGrid("spectral grids must be uniform".into()));
    }
    let support = process.support();
    if grid.first() < support.lower || grid.last() > support.upper {
        return Err(Error::InvalidGrid(format!(
            "grid [{}, {}] leaves the support [{}, {}]",
            grid.first(),
            grid.last(),
            support.lower,
            support.upper
        )));
    }
    let h = grid.spacing();
    let xs = grid.points();
    let mut density = Vec::with_capacity(n);
    let mut flux = Vec::with_capacity(n);
    for (i, &x) in xs.iter().enumerate() {
        let p = process.stationary_density(x);
        let v = process.half_variance(x);
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "stationary density {p} at grid point {i} (x = {x})"
            )));
        }
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "variance function {v} at grid point {i} (x = {x})"
            )));
        }
        density.push(p);
        flux.push(p * v);
    }
    let face: Vec<f64> = flux.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let h2 = h * h;
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i > 0 { face[i - 1] } else { 0.0 };
            let right = if i + 1 < n { face[i] } else { 0.0 };
            (left + right) / (h2 * density[i])
        })
        .collect();
    let offdiag: Vec<f64> = (0..n - 1)
        .map(|i| -face[i] / (h2 * (density[i] * density[i + 1]).sqrt()))
        .collect();
    let weights = density.iter().map(|p| (p * h).sqrt()).collect();
    Ok(DiscreteGenerator {
        diag,
        offdiag,
        weights,
        density,
        face_coefficients: face,
        grid: grid.clone(),
    })
}

/// Low end of the discrete spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    /// π-orthonormal: `Σᵢ πᵢ φₘ(xᵢ) φₙ(xᵢ) h = δₘₙ`.
    pub eigenfunctions: Vec<GridFunction>,
    pub grid: Grid,
}

impl SpectrumResult {
    /// The spectral gap `λ₁`.
    pub fn gap(&self) -> f64 {
        self.eigenvalues[1]
    }
}

/// The `k` smallest eigenpairs of the generator.
pub fn spectrum(generator: &DiscreteGenerator, k: usize) -> Result<SpectrumResult> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 eigenpairs, got {k}")));
    }
    if k > generator.diag.len() {
        return Err(Error::InvalidInput(format!(
            "{k} eigenpairs requested from a {}-point grid",
            generator.diag.len()
        )));
    }
    let pairs = tridiag_eigs(&generator.diag, &generator.offdiag, k)?;
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenfunctions = Vec::with_capacity(k);
    for pair in pairs {
        eigenvalues.push(pair.value);
        let values = pair
            .vector
            .iter()
            .zip(&generator.weights)
            .map(|(v, w)| v / w)
            .collect();
        eigenfunctions.push(GridFunction::new(generator.grid.clone(), values)?);
    }
    Ok(SpectrumResult {
        eigenvalues,
        eigenfunctions,
        grid: generator.grid.clone(),
    })
}

/// Interval used for spectral work on `spec`: `m₁ ± 8 sd` clipped to the
/// support, or the region where `π ≥ 1e−10` for heavy-tailed densities.
pub fn spectral_box(spec: &DistributionSpec) -> Result<(f64, f64)> {
    let support = spec.support();
    if support.is_bounded() {
        return Ok((support.lower, support.upper));
    }
    let heavy = matches!(
        spec.kind(),
        DistributionKind::StudentCauchy { .. }
            | DistributionKind::InverseGamma { .. }
            | DistributionKind::FisherSnedecor { .. }
    );
    if heavy {
        return Ok(density_box(spec, 1e-10));
    }
    let m = spec.moments()?;
    let sd = m.std_dev();
    Ok((
        (m.m1 - 8.0 * sd).max(support.lower),
        (m.m1 + 8.0 * sd).min(support.upper),
    ))
}

/// Smallest interval outside which `π < level`, clipped to the support.
fn density_box(spec: &DistributionSpec, level: f64) -> (f64, f64) {
    let support = spec.support();
    let m = spec.moments().map(|m| (m.m1, m.std_dev())).unwrap_or((0.0, 1.0));
    let (center, sd) = m;
    let mut step = sd;
    let mut lo = center;
    while lo - step > support.lower && spec.density(lo - step) >= level {
        lo -= step;
        step *= 1.5;
    }
    let lo = if lo - step <= support.lower { support.lower } else { bisect_level(spec, lo - step, lo, level) };
    let mut step = sd;
    let mut hi = center;
    while hi + step < support.upper && spec.density(hi + step) >= level {
        hi += step;
        step *= 1.5;
    }
    let hi = if hi + step >= support.upper { support.upper } else { bisect_level(spec, hi, hi + step, level) };
    (lo, hi)
}

fn bisect_level(spec: &DistributionSpec, mut a: f64, mut b: f64, level: f64) -> f64 {
    // exactly one of the ends is above `level`
    let a_above = spec.density(a) >= level;
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if (spec.density(m) >= level) == a_above {
            a = m;
        } else {
            b = m;
        }
    }
    if a_above { a } else { b }
}

/// Cell-centred spectral grid with `n` points on [`spectral_box`].
pub fn spectral_grid(spec: &DistributionSpec, n: usize) -> Result<Grid> {
    let (a, b) = spectral_box(spec)?;
    Grid::cell_centered(a, b, n)
}

/// Discretizes `process` on `n` points of the spectral box of its
/// stationary law and returns the `k` lowest eigenpairs.
pub fn process_spectrum(process: &OptimalProcess, n: usize, k: usize) -> Result<SpectrumResult> {
    let grid = spectral_grid(&process.source, n)?;
    spectrum(&discretize_generator(process, &grid)?, k)
}

/// Discrete Rayleigh quotient `Σ a_f (ΔQ)²/h / Σ πᵢ (Qᵢ − Q̄)² h` of the
/// trial function `q` (centred in the π-weighted sense first).
pub fn rayleigh_quotient(process: &dyn Diffusion, q: &GridFunction) -> Result<f64> {
    let grid = q.grid();
    let n = grid.len();
    let h = grid.spacing();
    let xs = grid.points();
    let density: Vec<f64> = xs.iter().map(|&x| process.stationary_density(x)).collect();
    let flux: Vec<f64> = xs
        .iter()
        .zip(&density)
        .map(|(&x, p)| p * process.half_variance(x))
        .collect();
    let values = q.values();
    let mass: f64 = density.iter().sum();
    let mean = values.iter().zip(&density).map(|(v, p)| v * p).sum::<f64>() / mass;
    let denominator: f64 = values
        .iter()
        .zip(&density)
        .map(|(v, p)| p * (v - mean).powi(2))
        .sum::<f64>()
        * h;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(denominator > 1e-20 * scale * scale * mass * h) {
        return Err(Error::ZeroDenominator);
    }
    let numerator: f64 = (0..n - 1)
        .map(|i| 0.5 * (flux[i] + flux[i + 1]) * (values[i + 1] - values[i]).powi(2))
        .sum::<f64>()
        / h;
    Ok(numerator / denominator)
}

/// Parameters of a multiplicative perturbation
/// `1 + amplitude·sin(2π·frequency·(x − a)/L + phase)` on a window `[a, a+L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation {
            amplitude: 0.5,
            frequency: 1.0,
            phase: 0.0,
        }
    }
}

/// The optimal variance function multiplied by `perturbation` and rescaled
/// so that its π-average is unchanged; the drift follows from detailed
/// balance. Such a process can only mix more slowly than `process`.
pub fn perturbed_process(process: &OptimalProcess, perturbation: Perturbation) -> Result<ExplicitDiffusion> {
    if !(perturbation.amplitude.abs() < 1.0) {
        return Err(Error::InvalidInput(format!(
            "perturbation amplitude {} must be below 1 in magnitude",
            perturbation.amplitude
        )));
    }
    let (a, b) = spectral_box(&process.source)?;
    let len = b - a;
    let factor = move |x: f64| {
        1.0 + perturbation.amplitude
            * (2.0 * std::f64::consts::PI * perturbation.frequency * (x - a) / len + perturbation.phase).sin()
    };
    let support = process.source.support();
    let base = process.clone();
    let raw = move |x: f64| base.variance_at(x).unwrap_or(0.0) * factor(x);
    let mean = process.source.integrate_against(&raw, support.lower, support.upper)?;
    let c = process.sigma_hat_sq_half / mean;
    Ok(ExplicitDiffusion::reversible(
        &process.source,
        move |x| c * raw(x),
        1e-6 * process.moments.std_dev(),
    ))
}
