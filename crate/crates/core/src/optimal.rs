//! The rate-optimal reversible diffusion for a given stationary density.
//!
//! For a density π with mean `m₁` and variance `v`, and an average-variance
//! budget `s = ∫ (σ²/2) π`, the fastest-mixing reversible diffusion has
//!
//! * spectral gap `λ₁ = s / v` and relaxation time `τ = 1/λ₁`,
//! * slowest eigenfunction `φ₁(x) = (x − m₁)/√v`,
//! * drift `μ(x) = λ₁ (m₁ − x)`,
//! * variance function `σ²(x)/2 = λ₁ G(x) / π(x)` with
//!   `G(x) = ∫_{x₁}^{x} (m₁ − z) π(z) dz = (m₁ − x)Π(x) + ∫_{x₁}^{x} Π(z) dz`.
//!
//! Closed forms are used for the catalog densities; everything else goes
//! through quadrature of `G`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::distributions::{cubic_ln_norm, CustomDensity, DistributionKind, DistributionSpec, MomentSummary, Support};
use crate::error::{Error, Result};
use crate::numerics::quadrature::gauss_legendre5;
use crate::numerics::{central_difference, hyp2f1, Grid};

/// `slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFunction {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearFunction {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope.mul_add(x, self.intercept)
    }

    /// Where the function vanishes (`None` for a zero slope).
    pub fn root(&self) -> Option<f64> {
        (self.slope != 0.0).then(|| -self.intercept / self.slope)
    }
}

/// A one-dimensional reversible diffusion `dX = μ dt + √(2V) dW` with
/// stationary density π on `support`.
pub trait Diffusion: Send + Sync {
    fn drift(&self, x: f64) -> f64;
    /// `V(x) = σ²(x)/2`.
    fn half_variance(&self, x: f64) -> f64;
    fn stationary_density(&self, x: f64) -> f64;
    fn support(&self) -> Support;
    /// A finite interval carrying all but a negligible part of π.
    fn window(&self) -> (f64, f64);
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A diffusion given directly by its coefficient functions.
#[derive(Clone)]
pub struct ExplicitDiffusion {
    drift: ScalarFn,
    half_variance: ScalarFn,
    density: ScalarFn,
    support: Support,
    window: (f64, f64),
}

impl std::fmt::Debug for ExplicitDiffusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExplicitDiffusion")
            .field("support", &self.support)
            .field("window", &self.window)
            .finish_non_exhaustive()
    }
}

impl ExplicitDiffusion {
    pub fn new<M, V, P>(drift: M, half_variance: V, density: P, support: Support, window: (f64, f64)) -> Self
    where
        M: Fn(f64) -> f64 + Send + Sync + 'static,
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ExplicitDiffusion {
            drift: Arc::new(drift),
            half_variance: Arc::new(half_variance),
            density: Arc::new(density),
            support,
            window,
        }
    }

    /// The reversible diffusion with stationary density `spec` and variance
    /// function `half_variance`; the drift `(Vπ)'/π` is taken by centred
    /// differences with step `h` (one-sided within `h` of a finite end).
    pub fn reversible<V>(spec: &DistributionSpec, half_variance: V, h: f64) -> Self
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let v: ScalarFn = Arc::new(half_variance);
        let s1 = spec.clone();
        let v1 = v.clone();
        let support = spec.support();
        let drift = move |x: f64| {
            let flux = |y: f64| v1(y) * s1.density(y);
            let lo = (x - h).max(support.lower);
            let hi = (x + h).min(support.upper);
            (flux(hi) - flux(lo)) / ((hi - lo) * s1.density(x))
        };
        let s2 = spec.clone();
        ExplicitDiffusion {
            drift: Arc::new(drift),
            half_variance: v,
            density: Arc::new(move |x| s2.density(x)),
            support,
            window: spec.default_window(),
        }
    }
}

impl Diffusion for ExplicitDiffusion {
    fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }
    fn half_variance(&self, x: f64) -> f64 {
        (self.half_variance)(x)
    }
    fn stationary_density(&self, x: f64) -> f64 {
        (self.density)(x)
    }
    fn support(&self) -> Support {
        self.support
    }
    fn window(&self) -> (f64, f64) {
        self.window
    }
}

/// How the variance function is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceMethod {
    /// Closed form when the density has one, quadrature otherwise.
    Auto,
    /// Always integrate `G` numerically.
    Quadrature,
}

#[derive(Debug, Clone, PartialEq)]
enum VarianceForm {
    /// `Σ c_k x^k`.
    Polynomial(Vec<f64>),
    Hyperexponential {
        p1: f64,
        p2: f64,
        eta1: f64,
        eta2: f64,
    },
    /// `G` tabulated cell by cell from both ends.
    Tabulated {
        knots: Vec<f64>,
        from_left: Vec<f64>,
        from_right: Vec<f64>,
    },
    Quadrature,
}

/// The canonical (unscaled) polynomial variance of a catalog density and its
/// π-average, when the density admits one.
pub fn canonical_half_variance(spec: &DistributionSpec) -> Result<Option<(Vec<f64>, f64)>> {
    use DistributionKind::*;
    let quad = |b0: f64, b1: f64, b2: f64| -> Result<Option<(Vec<f64>, f64)>> {
        let m = spec.moments()?;
        Ok(Some((vec![b0, b1, b2], b0 + b1 * m.m1 + b2 * m.m2)))
    };
    match spec.kind() {
        Beta { .. } => quad(0.0, 1.0, -1.0),
        Jacobi { .. } => quad(1.0, 0.0, -1.0),
        Gamma { .. } => quad(0.0, 1.0, 0.0),
        Normal { .. } => quad(1.0, 0.0, 0.0),
        StudentCauchy { .. } => quad(1.0, 0.0, 1.0),
        InverseGamma { .. } => quad(0.0, 0.0, 1.0),
        FisherSnedecor { nu1, nu2 } => quad(0.0, 1.0, nu1 / nu2),
        CubicPearson { alpha, beta, a } => Ok(Some((
            vec![0.0, 1.0, -(1.0 + a), *a],
            cubic_mean_half_variance(*alpha, *beta, *a)?,
        ))),
        _ => Ok(None),
    }
}

/// `E_π[x(1−x)(1−ax)]` for the cubic-variance density, via the Euler
/// integral `B(α+1, β+1)·₂F₁(α+β, α+1; α+β+2; a) / Z`.
pub fn cubic_mean_half_variance(alpha: f64, beta: f64, a: f64) -> Result<f64> {
    let ln_z = cubic_ln_norm(alpha, beta, a)?;
    Ok((ln_beta(alpha + 1.0, beta + 1.0) - ln_z).exp()
        * hyp2f1(alpha + beta, alpha + 1.0, alpha + beta + 2.0, a)?)
}

/// `(slope, intercept)` of `φ₁(x) = (x − m₁)/√(m₂ − m₁²)`.
pub fn phi1_from_moments(m1: f64, m2: f64) -> Result<LinearFunction> {
    let v = m2 - m1 * m1;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::DegenerateDistribution(v));
    }
    let slope = 1.0 / v.sqrt();
    Ok(LinearFunction {
        slope,
        intercept: -m1 * slope,
    })
}

/// The rate-optimal diffusion for a stationary density and variance budget.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalProcess {
    pub lambda1: f64,
    pub tau: f64,
    pub phi1: LinearFunction,
    pub drift: LinearFunction,
    pub sigma_hat_sq_half: f64,
    pub moments: MomentSummary,
    pub source: DistributionSpec,
    form: VarianceForm,
}

/// The optimal process for `spec` with average variance `sigma_hat_sq_half`.
pub fn synthesize(spec: &DistributionSpec, sigma_hat_sq_half: f64) -> Result<OptimalProcess> {
    synthesize_with(spec, sigma_hat_sq_half, VarianceMethod::Auto)
}

pub fn synthesize_with(
    spec: &DistributionSpec,
    sigma_hat_sq_half: f64,
    method: VarianceMethod,
) -> Result<OptimalProcess> {
    if !(sigma_hat_sq_half > 0.0) || !sigma_hat_sq_half.is_finite() {
        return Err(Error::InvalidInput(format!(
            "average variance must be positive, got {sigma_hat_sq_half}"
        )));
    }
    let moments = spec.moments()?;
    let lambda1 = sigma_hat_sq_half / moments.variance;
    let phi1 = phi1_from_moments(moments.m1, moments.m2)?;
    let drift = LinearFunction {
        slope: -lambda1,
        intercept: lambda1 * moments.m1,
    };
    let form = match method {
        VarianceMethod::Quadrature => quadrature_form(spec, moments.m1),
        VarianceMethod::Auto => match (spec.kind(), canonical_half_variance(spec)?) {
            (_, Some((coeffs, mean_q))) => {
                let c = sigma_hat_sq_half / mean_q;
                VarianceForm::Polynomial(coeffs.iter().map(|b| b * c).collect())
            }
            (DistributionKind::Hyperexponential { p1, p2, eta1, eta2 }, None) => {
                VarianceForm::Hyperexponential {
                    p1: *p1,
                    p2: *p2,
                    eta1: *eta1,
                    eta2: *eta2,
                }
            }
            _ => quadrature_form(spec, moments.m1),
        },
    };
    Ok(OptimalProcess {
        lambda1,
        tau: 1.0 / lambda1,
        phi1,
        drift,
        sigma_hat_sq_half,
        moments,
        source: spec.clone(),
        form,
    })
}

fn quadrature_form(spec: &DistributionSpec, m1: f64) -> VarianceForm {
    match spec.kind() {
        DistributionKind::Custom(CustomDensity::Tabulated(t)) => {
            let knots = t.knots().to_vec();
            let cells: Vec<f64> = knots
                .windows(2)
                .map(|w| gauss_legendre5(|z| (m1 - z) * t.pdf(z), w[0], w[1]))
                .collect();
            let mut from_left = vec![0.0; knots.len()];
            for i in 0..cells.len() {
                from_left[i + 1] = from_left[i] + cells[i];
            }
            let mut from_right = vec![0.0; knots.len()];
            for i in (0..cells.len()).rev() {
                from_right[i] = from_right[i + 1] - cells[i];
            }
            VarianceForm::Tabulated {
                knots,
                from_left,
                from_right,
            }
        }
        _ => VarianceForm::Quadrature,
    }
}

impl OptimalProcess {
    pub fn drift_at(&self, x: f64) -> f64 {
        self.drift.eval(x)
    }

    /// Whether the variance function comes from a closed form.
    pub fn has_closed_form(&self) -> bool {
        matches!(
            self.form,
            VarianceForm::Polynomial(_) | VarianceForm::Hyperexponential { .. }
        )
    }

    /// Polynomial coefficients of `σ²/2` when it is a polynomial.
    pub fn variance_polynomial(&self) -> Option<&[f64]> {
        match &self.form {
            VarianceForm::Polynomial(c) => Some(c),
            _ => None,
        }
    }

    /// `G(x) = ∫_{x₁}^{x} (m₁ − z) π(z) dz`, integrated from whichever end
    /// of the support is on the same side of `m₁` as `x`.
    pub fn g_integral(&self, x: f64) -> Result<f64> {
        let m1 = self.moments.m1;
        let support = self.source.support();
        if let VarianceForm::Tabulated {
            knots,
            from_left,
            from_right,
        } = &self.form
        {
            let n = knots.len();
            if x <= knots[0] || x >= knots[n - 1] {
                return Ok(0.0);
            }
            let i = knots.partition_point(|&k| k <= x) - 1;
            let f = |z: f64| (m1 - z) * self.source.density(z);
            return Ok(if x <= m1 {
                from_left[i] + gauss_legendre5(f, knots[i], x)
            } else {
                from_right[i + 1] + gauss_legendre5(f, knots[i + 1], x)
            });
        }
        if x <= m1 {
            self.source
                .integrate_against(|z| m1 - z, support.lower, x)
        } else {
            self.source
                .integrate_against(|z| z - m1, x, support.upper)
        }
    }

    fn variance_by_quadrature(&self, x: f64) -> Result<f64> {
        let p = self.source.density(x);
        if !(p > 0.0) {
            return Err(Error::NumericalFailure(format!(
                "stationary density vanishes at x = {x}"
            )));
        }
        Ok(self.lambda1 * self.g_integral(x)? / p)
    }

    /// `σ²(x)/2 = λ₁G(x)/π(x)` by quadrature, regardless of closed forms.
    pub fn variance_quadrature_path(&self, x: f64) -> Result<f64> {
        let support = self.source.support();
        if !(x > support.lower && x < support.upper) {
            return Err(Error::OutOfSupport {
                x,
                lower: support.lower,
                upper: support.upper,
            });
        }
        self.variance_by_quadrature(x)
    }

    /// `σ²(x)/2`. At a finite support end the closed form is evaluated
    /// directly; without one, the value `1e−8` (relative to the support
    /// scale) inside the end is reported as the limit.
    pub fn variance_at(&self, x: f64) -> Result<f64> {
        let support = self.source.support();
        if !support.contains(x) || !x.is_finite() {
            return Err(Error::OutOfSupport {
                x,
                lower: support.lower,
                upper: support.upper,
            });
        }
        match &self.form {
            VarianceForm::Polynomial(c) => Ok(c.iter().rev().fold(0.0, |acc, ck| acc * x + ck)),
            VarianceForm::Hyperexponential { p1, p2, eta1, eta2 } => {
                // scale both exponentials by e^{η_min x} to avoid underflow
                let eta_min = eta1.min(*eta2);
                let e1 = (-(eta1 - eta_min) * x).exp();
                let e2 = (-(eta2 - eta_min) * x).exp();
                let d = 1.0 / eta1 - 1.0 / eta2;
                let num = p1 * e1 * (x + p2 * d) + p2 * e2 * (x - p1 * d);
                let den = p1 * eta1 * e1 + p2 * eta2 * e2;
                Ok(self.lambda1 * num / den)
            }
            VarianceForm::Tabulated { .. } | VarianceForm::Quadrature => {
                let eps = 1e-8
                    * if support.is_bounded() {
                        support.width()
                    } else {
                        self.moments.std_dev()
                    };
                let xe = if x <= support.lower + eps {
                    support.lower + eps
                } else if x >= support.upper - eps {
                    support.upper - eps
                } else {
                    x
                };
                self.variance_by_quadrature(xe)
            }
        }
    }

    /// Tabulates `σ²/2` on `grid`.
    pub fn variance_on(&self, grid: &Grid) -> Result<Vec<f64>> {
        grid.points().iter().map(|&x| self.variance_at(x)).collect()
    }

    /// `(−λ₁/√ν)·φ₁(x)` with `ν = 1/v`, an alternative form of the drift.
    pub fn drift_from_phi1(&self, x: f64) -> f64 {
        -self.lambda1 / self.phi1.slope * self.phi1.eval(x)
    }
}

impl Diffusion for OptimalProcess {
    fn drift(&self, x: f64) -> f64 {
        self.drift.eval(x)
    }
    fn half_variance(&self, x: f64) -> f64 {
        self.variance_at(x).unwrap_or(f64::NAN)
    }
    fn stationary_density(&self, x: f64) -> f64 {
        self.source.density(x)
    }
    fn support(&self) -> Support {
        self.source.support()
    }
    fn window(&self) -> (f64, f64) {
        self.source.default_window()
    }
}

/// Max over the grid of `|μ(x) − (1/π)·d/dx(V π)|`, with the derivative by
/// centred differences of step `h`.
pub fn verify_detailed_balance(process: &dyn Diffusion, grid: &Grid, h: f64) -> f64 {
    grid.points()
        .iter()
        .map(|&x| {
            let p = process.stationary_density(x);
            let flux = |y: f64| process.half_variance(y) * process.stationary_density(y);
            (process.drift(x) - central_difference(flux, x, h) / p).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub positive: bool,
    pub min_value: f64,
    pub argmin: f64,
}

/// Chebyshev points of the first kind on the open interval `(a, b)`.
pub fn chebyshev_points(a: f64, b: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .rev()
        .map(|k| {
            let t = ((2 * k - 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * t
        })
        .collect()
}

/// Evaluates `σ²/2` at `n_points` interior Chebyshev points of the window
/// and reports whether all values are positive.
pub fn check_variance_positivity(process: &OptimalProcess, n_points: usize) -> Result<PositivityReport> {
    if n_points < 10 {
        return Err(Error::InvalidInput(format!("need at least 10 points, got {n_points}")));
    }
    let (a, b) = process.source.default_window();
    let mut report = PositivityReport {
        positive: true,
        min_value: f64::INFINITY,
        argmin: f64::NAN,
    };
    for x in chebyshev_points(a, b, n_points) {
        let v = process.variance_at(x)?;
        if v < report.min_value {
            report.min_value = v;
            report.argmin = x;
        }
        if !(v > 0.0) {
            report.positive = false;
        }
    }
    Ok(report)
}

/// `∫ (σ²/2) π dx`, which must reproduce the average-variance budget.
pub fn check_variance_mean(process: &OptimalProcess) -> Result<f64> {
    let support = process.source.support();
    match &process.form {
        VarianceForm::Polynomial(_) | VarianceForm::Hyperexponential { .. } => process
            .source
            .integrate_against(|x| process.variance_at(x).unwrap_or(f64::NAN), support.lower, support.upper),
        // V·π = λ₁·G, so integrate G directly
        _ => {
            let (a, b) = process.source.default_window();
            let inner = |x: f64| process.g_integral(x).unwrap_or(f64::NAN);
            let r = crate::numerics::quadrature::integrate_with(
                inner,
                a,
                b,
                crate::numerics::Tolerance::new(0.0, 1e-10),
            )?;
            Ok(process.lambda1 * r.value)
        }
    }
}

/// `π(x)·σ²(x)/2` at distance `d` inside each finite end (at `∓1/d` for
/// infinite ends); both values must tend to zero with `d`.
pub fn boundary_flux(process: &OptimalProcess, d: f64) -> Result<(f64, f64)> {
    let Support { lower, upper } = process.source.support();
    let xl = if lower.is_finite() { lower + d } else { -1.0 / d };
    let xu = if upper.is_finite() { upper - d } else { 1.0 / d };
    let f = |x: f64| -> Result<f64> { Ok(process.source.density(x) * process.variance_at(x)?) };
    Ok((f(xl)?, f(xu)?))
}

/// `(τ(Σ pᵢπᵢ), Σ pᵢ τ(πᵢ))` at a common average variance.
pub fn mixture_tau_concavity(
    specs: &[DistributionSpec],
    weights: &[f64],
    sigma_hat_sq_half: f64,
) -> Result<(f64, f64)> {
    let mix = DistributionSpec::mixture(specs, weights)?;
    let tau_mix = synthesize(&mix, sigma_hat_sq_half)?.tau;
    let mut tau_avg = 0.0;
    for (s, w) in specs.iter().zip(weights) {
        tau_avg += w * synthesize(s, sigma_hat_sq_half)?.tau;
    }
    Ok((tau_mix, tau_avg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn beta11() -> OptimalProcess {
        synthesize(&DistributionSpec::beta(1.0, 1.0).unwrap(), 0.2).unwrap()
    }

    #[test]
    fn beta_one_one() {
        let p = beta11();
        assert_abs_diff_eq!(p.lambda1, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.tau, 0.25, epsilon = 1e-12);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert_abs_diff_eq!(p.variance_at(x).unwrap(), x * (1.0 - x), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.variance_at(0.5).unwrap(), 0.25, epsilon = 1e-14);
        assert_eq!(p.variance_at(0.0).unwrap(), 0.0);
        assert!(matches!(p.variance_at(1.2), Err(Error::OutOfSupport { .. })));
    }

    #[test]
    fn cir_and_ou() {
        let p = synthesize(&DistributionSpec::gamma(0.0).unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(p.lambda1, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.drift.slope, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.drift.intercept, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.variance_at(2.5).unwrap(), 2.5, epsilon = 1e-14);
        let p = synthesize(&DistributionSpec::normal(0.0, 1.0).unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(p.lambda1, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.drift_at(1.7), -1.7, epsilon = 1e-14);
        assert_abs_diff_eq!(p.variance_at(-3.0).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn jacobi_at_zero() {
        for (a, b) in [(1.0, 1.0), (0.5, 2.0), (-0.3, 0.7)] {
            let spec = DistributionSpec::jacobi(a, b).unwrap();
            let s = 4.0 * (a + 1.0) * (b + 1.0) / ((a + b + 3.0) * (a + b + 2.0));
            let p = synthesize(&spec, s).unwrap();
            assert_abs_diff_eq!(p.variance_at(0.0).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn hyperexponential_rate_and_dual_path() {
        let spec = DistributionSpec::hyperexponential(0.5, 0.5, 1.0, 2.0).unwrap();
        let p = synthesize(&spec, 0.6875).unwrap();
        assert_abs_diff_eq!(p.lambda1, 1.0, epsilon = 1e-12);
        assert!(p.has_closed_form());
        let q = synthesize_with(&spec, 0.6875, VarianceMethod::Quadrature).unwrap();
        assert!(!q.has_closed_form());
        assert_abs_diff_eq!(p.variance_at(0.75).unwrap(), q.variance_at(0.75).unwrap(), epsilon = 1e-8);
        assert_abs_diff_eq!(p.variance_at(0.0).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn equal_rates_collapse_to_cir() {
        let spec = DistributionSpec::hyperexponential(0.5, 0.5, 1.0, 1.0).unwrap();
        let p = synthesize(&spec, 1.0).unwrap();
        for x in [0.1, 1.0, 7.5, 30.0] {
            assert_abs_diff_eq!(p.variance_at(x).unwrap(), x, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_forms_match_quadrature_path() {
        let specs = [
            DistributionSpec::beta(1.0, 2.0).unwrap(),
            DistributionSpec::beta(-0.5, 0.5).unwrap(),
            DistributionSpec::jacobi(1.0, 1.0).unwrap(),
            DistributionSpec::gamma(1.0).unwrap(),
            DistributionSpec::normal(0.0, 1.0).unwrap(),
            DistributionSpec::student_cauchy(3.0).unwrap(),
            DistributionSpec::inverse_gamma(3.0).unwrap(),
            DistributionSpec::fisher_snedecor(6.0, 10.0).unwrap(),
            DistributionSpec::cubic_pearson(1.0, 2.0, 0.5).unwrap(),
        ];
        for spec in specs {
            let a = synthesize(&spec, 0.7).unwrap();
            let b = synthesize_with(&spec, 0.7, VarianceMethod::Quadrature).unwrap();
            let m = spec.moments().unwrap();
            for t in [-1.5, -0.7, 0.0, 0.4, 1.3, 2.2] {
                let x = m.m1 + t * m.std_dev();
                let s = spec.support();
                if !(x > s.lower && x < s.upper) {
                    continue;
                }
                let (va, vb) = (a.variance_at(x).unwrap(), b.variance_at(x).unwrap());
                assert_relative_eq!(va, vb, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn phi1_coefficients() {
        let f = phi1_from_moments(0.0, 1.0).unwrap();
        assert_eq!((f.slope, f.intercept), (1.0, 0.0));
        let f = phi1_from_moments(0.5, 0.3).unwrap();
        assert_abs_diff_eq!(f.slope, 1.0 / 0.05f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, -0.5 / 0.05f64.sqrt(), epsilon = 1e-12);
        assert!(matches!(phi1_from_moments(1.0, 1.0), Err(Error::DegenerateDistribution(_))));
        assert!(matches!(phi1_from_moments(1.0, 0.5), Err(Error::DegenerateDistribution(_))));
    }

    #[test]
    fn phi1_is_normalized() {
        let spec = DistributionSpec::gamma(1.5).unwrap();
        let p = synthesize(&spec, 1.0).unwrap();
        assert_abs_diff_eq!(spec.expect(|x| p.phi1.eval(x)).unwrap(), 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(spec.expect(|x| p.phi1.eval(x).powi(2)).unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn drift_forms_agree() {
        let p = synthesize(&DistributionSpec::jacobi(0.3, 1.2).unwrap(), 0.9).unwrap();
        for x in [-0.9, -0.1, 0.4, 0.95] {
            assert_relative_eq!(p.drift_at(x), p.drift_from_phi1(x), max_relative = 1e-12);
        }
        assert_abs_diff_eq!(p.drift.root().unwrap(), p.moments.m1, epsilon = 1e-14);
    }

    #[test]
    fn detailed_balance_residuals() {
        let ou = synthesize(&DistributionSpec::normal(0.0, 1.0).unwrap(), 1.0).unwrap();
        let grid = Grid::uniform(-4.0, 4.0, 81).unwrap();
        assert!(verify_detailed_balance(&ou, &grid, 1e-4) <= 1e-6);
        let cir = synthesize(&DistributionSpec::gamma(0.0).unwrap(), 1.0).unwrap();
        let grid = Grid::uniform(0.05, 10.0, 81).unwrap();
        assert!(verify_detailed_balance(&cir, &grid, 1e-4) <= 1e-6);
        let spec = DistributionSpec::normal(0.0, 1.0).unwrap();
        let bad = ExplicitDiffusion::new(
            |x| -x + 0.1,
            |_| 1.0,
            move |x| spec.density(x),
            Support::real_line(),
            (-8.0, 8.0),
        );
        let grid = Grid::uniform(-4.0, 4.0, 81).unwrap();
        assert!(verify_detailed_balance(&bad, &grid, 1e-4) >= 0.099);
    }

    #[test]
    fn detailed_balance_residual_is_second_order() {
        let p = synthesize(&DistributionSpec::beta(1.5, 0.5).unwrap(), 0.3).unwrap();
        let grid = Grid::uniform(0.2, 0.8, 31).unwrap();
        let r1 = verify_detailed_balance(&p, &grid, 1e-2);
        let r2 = verify_detailed_balance(&p, &grid, 5e-3);
        assert!(r1 > 0.0 && (r1 / r2 - 4.0).abs() < 0.2, "{r1} {r2}");
    }

    #[test]
    fn reversible_drift_by_differences() {
        let spec = DistributionSpec::beta(1.0, 1.0).unwrap();
        let d = ExplicitDiffusion::reversible(&spec, |x| x * (1.0 - x), 1e-5);
        for x in [0.1, 0.5, 0.8] {
            assert_abs_diff_eq!(d.drift(x), 4.0 * (0.5 - x), epsilon = 1e-8);
        }
    }

    #[test]
    fn variance_positive_with_correct_mean_on_catalog() {
        let p = beta11();
        let r = check_variance_positivity(&p, 50).unwrap();
        assert!(r.positive && r.min_value > 0.0);
        assert_abs_diff_eq!(check_variance_mean(&p).unwrap(), 0.2, epsilon = 1e-8);
        let p = synthesize(&DistributionSpec::normal(0.0, 1.0).unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(check_variance_mean(&p).unwrap(), 1.0, epsilon = 1e-8);
        assert!(check_variance_positivity(&p, 5).is_err());
    }

    #[test]
    fn bimodal_mixture_is_positive() {
        let mix = DistributionSpec::mixture(
            &[DistributionSpec::beta(8.0, 1.0).unwrap(), DistributionSpec::beta(1.0, 8.0).unwrap()],
            &[0.5, 0.5],
        )
        .unwrap();
        let p = synthesize(&mix, 0.3).unwrap();
        let r = check_variance_positivity(&p, 40).unwrap();
        assert!(r.positive, "{r:?}");
        assert_abs_diff_eq!(check_variance_mean(&p).unwrap(), 0.3, epsilon = 1e-6);
    }

    #[test]
    fn tabulated_density_variance_positive_with_correct_mean() {
        let spec = DistributionSpec::tabulated_fn(
            |x| 1.0 + 0.6 * (5.0 * x).sin() + 0.3 * (13.0 * x).cos(),
            0.0,
            1.0,
            401,
        )
        .unwrap();
        let p = synthesize(&spec, 0.37).unwrap();
        assert!(check_variance_positivity(&p, 60).unwrap().positive);
        assert_abs_diff_eq!(check_variance_mean(&p).unwrap(), 0.37, epsilon = 1e-6);
    }

    #[test]
    fn boundary_flux_vanishes() {
        let p = beta11();
        let (l, u) = boundary_flux(&p, 1e-6).unwrap();
        assert!(l.abs() < 1e-10 && u.abs() < 1e-10);
        let p = synthesize(&DistributionSpec::gamma(0.5).unwrap(), 1.0).unwrap();
        let (l, u) = boundary_flux(&p, 1e-6).unwrap();
        assert!(l.abs() < 1e-6 && u.abs() < 1e-100, "{l} {u}");
    }

    #[test]
    fn drift_has_zero_mean() {
        for spec in [
            DistributionSpec::beta(2.0, 0.5).unwrap(),
            DistributionSpec::gamma(1.0).unwrap(),
            DistributionSpec::hyperexponential(0.3, 0.7, 0.5, 3.0).unwrap(),
        ] {
            let p = synthesize(&spec, 1.0).unwrap();
            assert_abs_diff_eq!(spec.expect(|x| p.drift_at(x)).unwrap(), 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn concavity_examples() {
        let b = DistributionSpec::beta(1.0, 1.0).unwrap();
        let (m, a) = mixture_tau_concavity(&[b], &[1.0], 0.3).unwrap();
        assert_abs_diff_eq!(m, a, epsilon = 1e-15);
        let e = [DistributionSpec::exponential(1.0).unwrap(), DistributionSpec::exponential(2.0).unwrap()];
        let (m, a) = mixture_tau_concavity(&e, &[0.5, 0.5], 1.0).unwrap();
        assert_abs_diff_eq!(m, 0.6875, epsilon = 1e-12);
        assert_abs_diff_eq!(a, 0.5 * 1.0 + 0.5 * 0.25, epsilon = 1e-12);
        let eq = [DistributionSpec::beta(1.0, 1.0).unwrap(), DistributionSpec::beta(2.0, 2.0).unwrap()];
        let (m, a) = mixture_tau_concavity(&eq, &[0.4, 0.6], 0.5).unwrap();
        assert_abs_diff_eq!(m, a, epsilon = 1e-12);
        let g = DistributionSpec::gamma(1.0).unwrap();
        assert_eq!(
            mixture_tau_concavity(&[eq[0].clone(), g], &[0.5, 0.5], 1.0),
            Err(Error::SupportMismatch)
        );
    }

    #[test]
    fn rejects_bad_budget() {
        let spec = DistributionSpec::beta(1.0, 1.0).unwrap();
        assert!(synthesize(&spec, 0.0).is_err());
        assert!(synthesize(&spec, f64::NAN).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rate_formula_and_scaling(a in -0.5f64..3.0, b in -0.5f64..3.0, s in 0.01f64..10.0, k in 0.1f64..10.0) {
            let spec = DistributionSpec::beta(a, b).unwrap();
            let p = synthesize(&spec, s).unwrap();
            let m = spec.moments().unwrap();
            prop_assert!((p.lambda1 * (m.m2 - m.m1 * m.m1) - s).abs() <= 1e-12 * s);
            prop_assert_eq!(p.tau, 1.0 / p.lambda1);
            let q = synthesize(&spec, k * s).unwrap();
            prop_assert!((q.lambda1 - k * p.lambda1).abs() <= 1e-12 * q.lambda1);
            for x in [0.1, 0.5, 0.9] {
                let (vp, vq) = (p.variance_at(x).unwrap(), q.variance_at(x).unwrap());
                prop_assert!((vq - k * vp).abs() <= 1e-12 * vq.abs().max(1e-300));
            }
        }

        #[test]
        fn translation_equivariance(shift in -3.0f64..3.0, w in 0.1f64..0.9) {
            let f = move |x: f64| 1.0 + w * (7.0 * x).sin();
            let base = DistributionSpec::tabulated_fn(f, 0.0, 1.0, 201).unwrap();
            let moved = DistributionSpec::tabulated_fn(move |x| f(x - shift), shift, 1.0 + shift, 201).unwrap();
            let p = synthesize(&base, 0.4).unwrap();
            let q = synthesize(&moved, 0.4).unwrap();
            prop_assert!((p.lambda1 - q.lambda1).abs() <= 1e-8 * p.lambda1);
            let (r0, r1) = (p.drift.root().unwrap(), q.drift.root().unwrap());
            prop_assert!((r1 - (r0 + shift)).abs() <= 1e-10);
        }
    }
}
