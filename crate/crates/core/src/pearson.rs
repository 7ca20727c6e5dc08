//! Closed-form catalog of optimal Pearson diffusions of hypergeometric type,
//! the cubic-variance process on `[0, 1]` and the hyperexponential process.
//!
//! Each [`PearsonRow`] carries two sets of columns: `printed`, the values
//! as commonly tabulated, and `derived`, the values implied by the density
//! through detailed balance and exact moments. Where the two disagree the
//! derived values are authoritative for the rows whose printed moments are
//! known to be unreliable ([`PearsonRow::is_flagged`]).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{cubic_raw_moments, DistributionSpec};
use crate::error::{Error, Result};
use crate::numerics::{central_difference, hyp1f1, hyp2f0_terminating, hyp2f1, pochhammer, second_difference};
use crate::optimal::{canonical_half_variance, cubic_mean_half_variance, synthesize, LinearFunction};

/// The seven rows of the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowName {
    /// Beta density on `[0, 1]`.
    Hypergeometric,
    Jacobi,
    /// Gamma density, Cox–Ingersoll–Ross process.
    Cir,
    OrnsteinUhlenbeck,
    Student,
    ReciprocalGamma,
    FisherSnedecor,
}

impl RowName {
    pub const ALL: [RowName; 7] = [
        RowName::Hypergeometric,
        RowName::Jacobi,
        RowName::Cir,
        RowName::OrnsteinUhlenbeck,
        RowName::Student,
        RowName::ReciprocalGamma,
        RowName::FisherSnedecor,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RowName::Hypergeometric => "hypergeometric",
            RowName::Jacobi => "jacobi",
            RowName::Cir => "cir",
            RowName::OrnsteinUhlenbeck => "ornstein_uhlenbeck",
            RowName::Student => "student",
            RowName::ReciprocalGamma => "reciprocal_gamma",
            RowName::FisherSnedecor => "fisher_snedecor",
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            RowName::Hypergeometric | RowName::Jacobi => &["alpha", "beta"],
            RowName::Cir | RowName::Student | RowName::ReciprocalGamma => &["alpha"],
            RowName::OrnsteinUhlenbeck => &["x0", "sigma"],
            RowName::FisherSnedecor => &["nu1", "nu2"],
        }
    }

    pub fn default_params(&self) -> &'static [f64] {
        match self {
            RowName::Hypergeometric => &[1.0, 2.0],
            RowName::Jacobi => &[1.0, 1.0],
            RowName::Cir => &[1.0],
            RowName::OrnsteinUhlenbeck => &[0.0, 1.0],
            RowName::Student => &[3.0],
            RowName::ReciprocalGamma => &[3.0],
            RowName::FisherSnedecor => &[6.0, 10.0],
        }
    }
}

impl fmt::Display for RowName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RowName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', ' '], "_");
        Ok(match key.as_str() {
            "hypergeometric" | "beta" => RowName::Hypergeometric,
            "jacobi" => RowName::Jacobi,
            "cir" | "gamma" => RowName::Cir,
            "ornstein_uhlenbeck" | "ou" | "normal" => RowName::OrnsteinUhlenbeck,
            "student" | "cauchy" | "student_cauchy" => RowName::Student,
            "reciprocal_gamma" | "inverse_gamma" => RowName::ReciprocalGamma,
            "fisher_snedecor" | "f" => RowName::FisherSnedecor,
            _ => return Err(Error::InvalidInput(format!("unknown catalog row '{s}'"))),
        })
    }
}

/// Drift `a₀ + a₁x`, variance `b₀ + b₁x + b₂x²` and the scalar columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowColumns {
    pub drift: [f64; 2],
    pub variance: [f64; 3],
    pub m1: f64,
    pub var: f64,
    pub lambda1: f64,
    pub sigma_hat_sq_half: f64,
}

impl RowColumns {
    pub fn drift_at(&self, x: f64) -> f64 {
        self.drift[0] + self.drift[1] * x
    }

    pub fn variance_at(&self, x: f64) -> f64 {
        self.variance[0] + x * (self.variance[1] + x * self.variance[2])
    }

    /// `λₙ = −n a₁ − n(n−1) b₂`, the eigenvalue of the degree-`n`
    /// polynomial solution of `(σ²/2) φ'' + μ φ' + λ φ = 0`.
    pub fn polynomial_eigenvalue(&self, n: usize) -> f64 {
        let n = n as f64;
        -n * self.drift[1] - n * (n - 1.0) * self.variance[2]
    }

    /// `(σ²/2)φ'' + μφ' + λφ` at `x` by centred differences of step `h`.
    pub fn ode_residual<F: Fn(f64) -> f64>(&self, phi: F, lambda: f64, x: f64, h: f64) -> f64 {
        self.variance_at(x) * second_difference(&phi, x, h)
            + self.drift_at(x) * central_difference(&phi, x, h)
            + lambda * phi(x)
    }
}

/// One row of the catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct PearsonRow {
    pub name: RowName,
    pub params: Vec<(&'static str, f64)>,
    pub printed: RowColumns,
    pub derived: RowColumns,
    /// Largest `n` with a discrete eigenvalue; `None` for an infinite
    /// polynomial spectrum.
    pub n_max_discrete: Option<usize>,
    spec: DistributionSpec,
}

impl PearsonRow {
    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    /// Rows whose printed moments are superseded by the derived values.
    pub fn is_flagged(&self) -> bool {
        matches!(self.name, RowName::Student | RowName::ReciprocalGamma)
    }

    /// The columns a verification compares against.
    pub fn governing(&self) -> &RowColumns {
        if self.is_flagged() {
            &self.derived
        } else {
            &self.printed
        }
    }

    pub fn drift_coeffs(&self) -> [f64; 2] {
        self.governing().drift
    }

    pub fn variance_coeffs(&self) -> [f64; 3] {
        self.governing().variance
    }

    /// The tabulated `σ̂²/2`.
    pub fn sigma_hat_sq_half(&self) -> f64 {
        self.printed.sigma_hat_sq_half
    }

    /// `λₙ` as tabulated.
    pub fn lambda_n(&self, n: usize) -> f64 {
        let p = |name: &str| self.param(name);
        let nf = n as f64;
        match self.name {
            RowName::Hypergeometric | RowName::Jacobi => nf * (nf + p("alpha") + p("beta") + 1.0),
            RowName::Cir => nf,
            RowName::OrnsteinUhlenbeck => nf / p("sigma").powi(2),
            RowName::Student | RowName::ReciprocalGamma => nf * (2.0 * p("alpha") - nf),
            RowName::FisherSnedecor => {
                let (nu1, nu2) = (p("nu1"), p("nu2"));
                nu1 / (2.0 * nu2) * nf * (6.0 + nu2 - 2.0 * nf)
            }
        }
    }

    /// `λₙ` implied by the derived drift and variance.
    pub fn derived_lambda_n(&self, n: usize) -> f64 {
        self.derived.polynomial_eigenvalue(n)
    }

    /// Whether the tabulated `λ₂` falls below `λ₁` (possible for small `ν₂`
    /// in the Fisher–Snedecor row).
    pub fn lambda_ordering_violated(&self) -> bool {
        self.n_max_discrete.is_none_or(|m| m >= 2) && self.lambda_n(2) < self.lambda_n(1)
    }

    pub fn param(&self, name: &str) -> f64 {
        self.params
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .unwrap_or(f64::NAN)
    }

    /// `name(k=v, …)`.
    pub fn label(&self) -> String {
        let ps: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}({})", self.name, ps.join(", "))
    }
}

fn bad(msg: String) -> Error {
    Error::ParamOutOfRange(msg)
}

/// Builds the catalog row `name` with parameters in the order of
/// [`RowName::param_names`].
pub fn row(name: RowName, params: &[f64]) -> Result<PearsonRow> {
    let names = name.param_names();
    if params.len() != names.len() {
        return Err(bad(format!(
            "{name} takes {} parameters ({}), got {}",
            names.len(),
            names.join(", "),
            params.len()
        )));
    }
    let spec = match name {
        RowName::Hypergeometric => DistributionSpec::beta(params[0], params[1]),
        RowName::Jacobi => DistributionSpec::jacobi(params[0], params[1]),
        RowName::Cir => DistributionSpec::gamma(params[0]),
        RowName::OrnsteinUhlenbeck => DistributionSpec::normal(params[0], params[1]),
        RowName::Student => DistributionSpec::student_cauchy(params[0]),
        RowName::ReciprocalGamma => DistributionSpec::inverse_gamma(params[0]),
        RowName::FisherSnedecor => {
            if !(params[1] > 4.0) {
                return Err(bad(format!("nu2 = {} must exceed 4 for a finite variance", params[1])));
            }
            DistributionSpec::fisher_snedecor(params[0], params[1])
        }
    }
    .map_err(|e| match e {
        Error::ParamOutOfRange(m) => bad(m),
        other => other,
    })?;

    let printed = printed_columns(name, params);
    let derived = derived_columns(&spec)?;
    let n_max_discrete = match name {
        RowName::Student | RowName::ReciprocalGamma => Some(params[0].floor() as usize),
        // eigenpolynomials of degree n need E[x^{2n}] < ∞, i.e. n < ν₂/4
        RowName::FisherSnedecor => Some(((params[1] / 4.0).ceil() as usize).saturating_sub(1)),
        _ => None,
    };
    Ok(PearsonRow {
        name,
        params: names.iter().copied().zip(params.iter().copied()).collect(),
        printed,
        derived,
        n_max_discrete,
        spec,
    })
}

/// All seven rows at their default parameters.
pub fn default_rows() -> Result<Vec<PearsonRow>> {
    RowName::ALL.iter().map(|n| row(*n, n.default_params())).collect()
}

fn printed_columns(name: RowName, p: &[f64]) -> RowColumns {
    match name {
        RowName::Hypergeometric => {
            let (a, b) = (p[0], p[1]);
            let s = a + b + 2.0;
            RowColumns {
                drift: [a + 1.0, -s],
                variance: [0.0, 1.0, -1.0],
                m1: (a + 1.0) / s,
                var: (a + 1.0) * (b + 1.0) / (s * s * (s + 1.0)),
                lambda1: s,
                sigma_hat_sq_half: (a + 1.0) * (b + 1.0) / ((s + 1.0) * s),
            }
        }
        RowName::Jacobi => {
            let (a, b) = (p[0], p[1]);
            let s = a + b + 2.0;
            RowColumns {
                drift: [b - a, -s],
                variance: [1.0, 0.0, -1.0],
                m1: (b - a) / s,
                var: 4.0 * (a + 1.0) * (b + 1.0) / (s * s * (s + 1.0)),
                lambda1: s,
                sigma_hat_sq_half: 4.0 * (a + 1.0) * (b + 1.0) / ((s + 1.0) * s),
            }
        }
        RowName::Cir => {
            let a = p[0];
            RowColumns {
                drift: [a + 1.0, -1.0],
                variance: [0.0, 1.0, 0.0],
                m1: a + 1.0,
                var: a + 1.0,
                lambda1: 1.0,
                sigma_hat_sq_half: a + 1.0,
            }
        }
        RowName::OrnsteinUhlenbeck => {
            let (x0, s2) = (p[0], p[1] * p[1]);
            RowColumns {
                drift: [x0 / s2, -1.0 / s2],
                variance: [1.0, 0.0, 0.0],
                m1: x0,
                var: s2,
                lambda1: 1.0 / s2,
                sigma_hat_sq_half: 1.0,
            }
        }
        RowName::Student => {
            let a = p[0];
            RowColumns {
                drift: [0.0, 1.0 - 2.0 * a],
                variance: [1.0, 0.0, 1.0],
                m1: 0.0,
                var: 1.0 / (2.0 * (a - 1.0)),
                lambda1: 2.0 * a - 1.0,
                sigma_hat_sq_half: (a - 1.0) / (a - 0.5),
            }
        }
        RowName::ReciprocalGamma => {
            let a = p[0];
            RowColumns {
                drift: [1.0, -(2.0 * a + 1.0)],
                variance: [0.0, 0.0, 1.0],
                m1: 1.0 / (2.0 * a - 1.0),
                var: 1.0 / (2.0 * (a - 1.0) * (a - 1.0).powi(2)),
                lambda1: 2.0 * a - 1.0,
                sigma_hat_sq_half: (2.0 * a - 1.0) / (2.0 * a - 2.0),
            }
        }
        RowName::FisherSnedecor => {
            let (n1, n2) = (p[0], p[1]);
            RowColumns {
                drift: [n1 / 2.0 - 1.0, -(2.0 * n1 / n2 + n1 / 2.0)],
                variance: [0.0, 1.0, n1 / n2],
                m1: n2 / (n2 - 2.0),
                var: 2.0 * n2 * n2 * (n2 + n1 - 2.0) / (n1 * (n2 - 2.0).powi(2) * (n2 - 4.0)),
                lambda1: n1 * (2.0 / n2 + 0.5),
                sigma_hat_sq_half: n2 * (n2 - 4.0) / (n1 + n2 - 2.0),
            }
        }
    }
}

/// Columns implied by the density: exact moments, `σ̂²/2 = E_π[q]` for the
/// canonical variance `q`, `λ₁ = σ̂²/2 ÷ var` and drift `λ₁(m₁ − x)`.
fn derived_columns(spec: &DistributionSpec) -> Result<RowColumns> {
    let m = spec.moments()?;
    let (coeffs, mean_q) = canonical_half_variance(spec)?
        .ok_or_else(|| Error::InvalidInput(format!("{} has no polynomial variance", spec.name())))?;
    let lambda1 = mean_q / m.variance;
    Ok(RowColumns {
        drift: [lambda1 * m.m1, -lambda1],
        variance: [coeffs[0], coeffs[1], coeffs[2]],
        m1: m.m1,
        var: m.variance,
        lambda1,
        sigma_hat_sq_half: mean_q,
    })
}

/// Monic polynomial solution of `(b₀+b₁x+b₂x²)φ'' + (a₀+a₁x)φ' + λₙφ = 0`,
/// coefficients in increasing degree.
fn pearson_polynomial(drift: [f64; 2], variance: [f64; 3], n: usize) -> Vec<f64> {
    let [a0, a1] = drift;
    let [b0, b1, b2] = variance;
    let nf = n as f64;
    let lambda = -nf * a1 - nf * (nf - 1.0) * b2;
    let mut c = vec![0.0; n + 3];
    c[n] = 1.0;
    for j in (0..n).rev() {
        let jf = j as f64;
        let num = c[j + 1] * (b1 * (jf + 1.0) * jf + a0 * (jf + 1.0)) + c[j + 2] * b0 * (jf + 2.0) * (jf + 1.0);
        c[j] = -num / (b2 * jf * (jf - 1.0) + a1 * jf + lambda);
    }
    c.truncate(n + 1);
    c
}

/// Value at `x` of the Rodrigues polynomial `w⁻¹ dⁿ/dxⁿ (w qⁿ)` for a
/// Pearson weight `w` with `(q w)' = μ w`.
fn rodrigues(drift: [f64; 2], variance: [f64; 3], n: usize, x: f64) -> f64 {
    let lead: f64 = (0..n).map(|k| drift[1] + (n + k) as f64 * variance[2] - variance[2]).product();
    let c = pearson_polynomial(drift, variance, n);
    lead * c.iter().rev().fold(0.0, |acc, ck| acc * x + ck)
}

/// Probabilists' Hermite polynomial through `yⁿ ₂F₀(−n/2, (1−n)/2; ; −2/y²)`.
fn hermite_he(n: usize, y: f64) -> Result<f64> {
    let a = -(n as f64) / 2.0;
    let b = (1.0 - n as f64) / 2.0;
    if y == 0.0 {
        // only the yⁿ⁻²ᵏ = y⁰ term survives
        if n % 2 == 1 {
            return Ok(0.0);
        }
        let k = n / 2;
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        return Ok(pochhammer(a, k) * pochhammer(b, k) / fact * (-2.0f64).powi(k as i32));
    }
    Ok(y.powi(n as i32) * hyp2f0_terminating(a, b, -2.0 / (y * y))?)
}

/// Un-normalized eigenfunction `φₙ(x)` of the row, with `φ₀ = 1`.
pub fn eigenfunction(row: &PearsonRow, n: usize, x: f64) -> Result<f64> {
    if let Some(n_max) = row.n_max_discrete {
        if n > n_max {
            return Err(Error::BeyondDiscreteSpectrum { n, n_max });
        }
    }
    let support = row.spec.support();
    if !support.contains(x) || !x.is_finite() {
        return Err(Error::OutOfSupport {
            x,
            lower: support.lower,
            upper: support.upper,
        });
    }
    let p = |k: &str| row.param(k);
    let nf = n as f64;
    match row.name {
        RowName::Hypergeometric => hyp2f1(-nf, nf + p("alpha") + p("beta") + 1.0, p("alpha") + 1.0, x),
        RowName::Jacobi => hyp2f1(
            -nf,
            nf + p("alpha") + p("beta") + 1.0,
            p("alpha") + 1.0,
            0.5 * (1.0 - x),
        ),
        RowName::Cir => hyp1f1(-nf, p("alpha") + 1.0, x),
        RowName::OrnsteinUhlenbeck => hermite_he(n, (x - p("x0")) / p("sigma")),
        RowName::Student | RowName::ReciprocalGamma => {
            Ok(rodrigues(row.derived.drift, row.derived.variance, n, x))
        }
        RowName::FisherSnedecor => {
            let (nu1, nu2) = (p("nu1"), p("nu2"));
            hyp2f1(-nf, nf - nu2 / 2.0, nu1 / 2.0, -nu1 / nu2 * x)
        }
    }
}

/// Deviations of the synthesized process from a row's columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReport {
    pub row: String,
    pub m1: f64,
    pub var: f64,
    pub lambda1: f64,
    pub sigma_hat_sq_half: f64,
    pub lambda1_dev: f64,
    pub variance_dev: f64,
    pub drift_dev: f64,
    pub passed: bool,
}

/// Tolerances of [`verify_row_against_theorem1`].
pub const LAMBDA1_TOL: f64 = 1e-10;
pub const VARIANCE_TOL: f64 = 1e-7;
pub const DRIFT_TOL: f64 = 1e-10;

/// 200 interior points: the whole support when bounded, `m₁ ± 6 sd`
/// clipped to the support otherwise.
pub fn verification_points(spec: &DistributionSpec) -> Result<Vec<f64>> {
    let s = spec.support();
    let (lo, hi) = if s.is_bounded() {
        (s.lower, s.upper)
    } else {
        let m = spec.moments()?;
        let sd = m.std_dev();
        ((m.m1 - 6.0 * sd).max(s.lower), (m.m1 + 6.0 * sd).min(s.upper))
    };
    Ok((0..200).map(|i| lo + (i as f64 + 0.5) * (hi - lo) / 200.0).collect())
}

/// Synthesizes the optimal process for the row's density at the governing
/// `σ̂²/2` and measures how far it is from the governing columns.
pub fn check_row(row: &PearsonRow) -> Result<RowReport> {
    let cols = row.governing();
    let process = synthesize(&row.spec, cols.sigma_hat_sq_half)?;
    let lambda1_dev = (process.lambda1 - cols.lambda1).abs();
    let mut variance_dev: f64 = 0.0;
    let mut drift_dev: f64 = 0.0;
    for x in verification_points(&row.spec)? {
        variance_dev = variance_dev.max((process.variance_at(x)? - cols.variance_at(x)).abs());
        drift_dev = drift_dev.max((process.drift_at(x) - cols.drift_at(x)).abs());
    }
    let passed = lambda1_dev <= LAMBDA1_TOL * cols.lambda1.abs().max(1.0)
        && variance_dev <= VARIANCE_TOL
        && drift_dev <= DRIFT_TOL;
    Ok(RowReport {
        row: row.label(),
        m1: cols.m1,
        var: cols.var,
        lambda1: cols.lambda1,
        sigma_hat_sq_half: cols.sigma_hat_sq_half,
        lambda1_dev,
        variance_dev,
        drift_dev,
        passed,
    })
}

/// Like [`check_row`] but a failed comparison is an error.
pub fn verify_row_against_theorem1(row: &PearsonRow) -> Result<RowReport> {
    let report = check_row(row)?;
    if report.passed {
        Ok(report)
    } else {
        Err(Error::RowMismatch {
            row: report.row,
            lambda1_dev: report.lambda1_dev,
            variance_dev: report.variance_dev,
            drift_dev: report.drift_dev,
        })
    }
}

/// The cubic-variance process `σ²/2 ∝ x(1−x)(1−ax)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicExample {
    pub spec: DistributionSpec,
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub m1: f64,
    pub m2: f64,
    /// `E_π[x(1−x)(1−ax)]`, the budget for which `σ²/2 = x(1−x)(1−ax)`.
    pub sigma_hat_sq_half: f64,
    pub lambda1: f64,
    /// Detailed-balance drift `α − (α + β(1−a))x`.
    pub drift: LinearFunction,
    /// The frequently quoted `α − β(1−a)x`, kept for comparison; it does
    /// not balance the density.
    pub printed_drift: LinearFunction,
}

impl CubicExample {
    /// `x(1−x)(1−ax)`.
    pub fn variance_at(&self, x: f64) -> f64 {
        x * (1.0 - x) * (1.0 - self.a * x)
    }

    pub fn variance_coeffs(&self) -> [f64; 4] {
        [0.0, 1.0, -(1.0 + self.a), self.a]
    }
}

/// Builds the cubic example; moments come from the ₂F₁ closed forms and are
/// cross-checked against quadrature of the density to `1e−6`.
pub fn cubic_example(alpha: f64, beta: f64, a: f64) -> Result<CubicExample> {
    let spec = DistributionSpec::cubic_pearson(alpha, beta, a)?;
    let (m1, m2) = cubic_raw_moments(alpha, beta, a)?;
    let q1 = spec.expect(|x| x)?;
    let q2 = spec.expect(|x| x * x)?;
    if (m1 - q1).abs() > 1e-6 || (m2 - q2).abs() > 1e-6 {
        return Err(Error::NumericalFailure(format!(
            "closed-form moments ({m1}, {m2}) disagree with quadrature ({q1}, {q2})"
        )));
    }
    let sigma_hat_sq_half = cubic_mean_half_variance(alpha, beta, a)?;
    let lambda1 = sigma_hat_sq_half / (m2 - m1 * m1);
    Ok(CubicExample {
        spec,
        alpha,
        beta,
        a,
        m1,
        m2,
        sigma_hat_sq_half,
        lambda1,
        drift: LinearFunction {
            slope: -(alpha + beta * (1.0 - a)),
            intercept: alpha,
        },
        printed_drift: LinearFunction {
            slope: -beta * (1.0 - a),
            intercept: alpha,
        },
    })
}

/// Two exponential processes in parallel: `π = p₁η₁e^{−η₁x} + p₂η₂e^{−η₂x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperexponentialExample {
    pub spec: DistributionSpec,
    pub p1: f64,
    pub p2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub m1: f64,
    /// `p₁/η₁² + p₂/η₂² + p₁p₂(1/η₁ − 1/η₂)²`.
    pub variance: f64,
}

impl HyperexponentialExample {
    pub fn lambda1(&self, sigma_hat_sq_half: f64) -> f64 {
        sigma_hat_sq_half / self.variance
    }

    fn weighted(&self, sigma_hat_sq_half: f64, x: f64, sign: f64) -> f64 {
        let d = 1.0 / self.eta1 - 1.0 / self.eta2;
        let e1 = self.p1 * (-self.eta1 * x).exp();
        let e2 = self.p2 * (-self.eta2 * x).exp();
        let num = e1 * (x + self.p2 * d) + sign * e2 * (x - self.p1 * d);
        self.lambda1(sigma_hat_sq_half) * num / self.spec.density(x)
    }

    /// `σ²(x)/2 = (σ̂²/2)/(var·π(x)) · [p₁e^{−η₁x}(x + p₂(1/η₁−1/η₂)) +
    /// p₂e^{−η₂x}(x + p₁(1/η₂−1/η₁))]`.
    pub fn variance_fn(&self, sigma_hat_sq_half: f64, x: f64) -> f64 {
        self.weighted(sigma_hat_sq_half, x, 1.0)
    }

    /// The same expression with a minus sign between the two components,
    /// as it is sometimes quoted. It does not vanish at the origin (so the
    /// boundary flux is nonzero) and its π-average is not `σ̂²/2`; it is kept
    /// only to show the discrepancy.
    pub fn printed_variance_fn(&self, sigma_hat_sq_half: f64, x: f64) -> f64 {
        self.weighted(sigma_hat_sq_half, x, -1.0)
    }
}

pub fn hyperexponential(p1: f64, p2: f64, eta1: f64, eta2: f64) -> Result<HyperexponentialExample> {
    let spec = DistributionSpec::hyperexponential(p1, p2, eta1, eta2)?;
    let d = 1.0 / eta1 - 1.0 / eta2;
    Ok(HyperexponentialExample {
        spec,
        p1,
        p2,
        eta1,
        eta2,
        m1: p1 / eta1 + p2 / eta2,
        variance: p1 / (eta1 * eta1) + p2 / (eta2 * eta2) + p1 * p2 * d * d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimal::{synthesize_with, VarianceMethod};
    use crate::spectral::process_spectrum;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn jacobi_row_columns() {
        let (a, b) = (0.5, 2.0);
        let r = row(RowName::Jacobi, &[a, b]).unwrap();
        assert_eq!(r.printed.variance, [1.0, 0.0, -1.0]);
        assert_eq!(r.printed.drift, [b - a, -(a + b + 2.0)]);
        assert_abs_diff_eq!(r.lambda_n(3), 3.0 * (3.0 + a + b + 1.0), epsilon = 1e-14);
        let s = 4.0 * (a + 1.0) * (b + 1.0) / ((a + b + 3.0) * (a + b + 2.0));
        assert_abs_diff_eq!(r.sigma_hat_sq_half(), s, epsilon = 1e-15);
    }

    #[test]
    fn student_row() {
        let r = row(RowName::Student, &[2.0]).unwrap();
        assert_abs_diff_eq!(r.printed.lambda1, 3.0);
        assert_abs_diff_eq!(r.sigma_hat_sq_half(), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(r.variance_coeffs(), [1.0, 0.0, 1.0]);
        assert_eq!(r.n_max_discrete, Some(2));
        // the derived budget is the reciprocal of the tabulated one
        assert_abs_diff_eq!(r.derived.sigma_hat_sq_half, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.derived.lambda1, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn fisher_snedecor_lambda1() {
        let r = row(RowName::FisherSnedecor, &[6.0, 10.0]).unwrap();
        assert_abs_diff_eq!(r.printed.lambda1, 6.0 * (0.2 + 0.5), epsilon = 1e-14);
        assert_abs_diff_eq!(r.lambda_n(1), r.printed.lambda1, epsilon = 1e-14);
        assert_abs_diff_eq!(r.derived.lambda1, 6.0 * (0.5 - 0.1), epsilon = 1e-12);
        assert!(!r.lambda_ordering_violated());
        assert_eq!(r.n_max_discrete, Some(2));
    }

    #[test]
    fn domains() {
        assert!(matches!(row(RowName::Student, &[1.5]), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(row(RowName::Hypergeometric, &[-1.0, 1.0]), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(row(RowName::FisherSnedecor, &[3.0, 4.0]), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(row(RowName::Cir, &[1.0, 2.0]), Err(Error::ParamOutOfRange(_))));
        assert_eq!("inverse-gamma".parse::<RowName>().unwrap(), RowName::ReciprocalGamma);
        assert!("pearson7".parse::<RowName>().is_err());
    }

    #[test]
    fn printed_and_derived_agree_on_consistent_rows() {
        for name in [RowName::Hypergeometric, RowName::Jacobi, RowName::Cir, RowName::OrnsteinUhlenbeck] {
            let r = row(name, name.default_params()).unwrap();
            let (p, d) = (r.printed, r.derived);
            assert_relative_eq!(p.m1 + 1.0, d.m1 + 1.0, max_relative = 1e-12);
            assert_relative_eq!(p.var, d.var, max_relative = 1e-12);
            assert_relative_eq!(p.lambda1, d.lambda1, max_relative = 1e-12);
            assert_relative_eq!(p.sigma_hat_sq_half, d.sigma_hat_sq_half, max_relative = 1e-12);
            assert_abs_diff_eq!(p.drift[0], d.drift[0], epsilon = 1e-12);
            assert_abs_diff_eq!(p.drift[1], d.drift[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn table_internal_consistency() {
        // λ₁ = σ̂²/2 ÷ var within each row's own columns
        for r in default_rows().unwrap() {
            let d = &r.derived;
            assert_relative_eq!(d.lambda1, d.sigma_hat_sq_half / d.var, max_relative = 1e-12);
            let p = &r.printed;
            let consistent = (p.lambda1 - p.sigma_hat_sq_half / p.var).abs() <= 1e-12 * p.lambda1;
            let expected = !matches!(
                r.name,
                RowName::Student | RowName::ReciprocalGamma | RowName::FisherSnedecor
            );
            assert_eq!(consistent, expected, "{}", r.label());
        }
    }

    #[test]
    fn verify_rows() {
        for name in RowName::ALL {
            let r = row(name, name.default_params()).unwrap();
            let res = verify_row_against_theorem1(&r);
            if name == RowName::FisherSnedecor {
                assert!(matches!(res, Err(Error::RowMismatch { .. })));
            } else {
                let rep = res.unwrap_or_else(|e| panic!("{}: {e}", r.label()));
                assert!(rep.passed);
            }
        }
        let ou = row(RowName::OrnsteinUhlenbeck, &[0.0, 1.0]).unwrap();
        assert_eq!(ou.drift_coeffs(), [0.0, -1.0]);
        let st = verify_row_against_theorem1(&row(RowName::Student, &[3.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(st.lambda1, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn fisher_snedecor_derived_columns_pass() {
        let r = row(RowName::FisherSnedecor, &[6.0, 10.0]).unwrap();
        let p = synthesize(r.spec(), r.derived.sigma_hat_sq_half).unwrap();
        assert_abs_diff_eq!(p.lambda1, 2.4, epsilon = 1e-12);
        for x in verification_points(r.spec()).unwrap() {
            assert_abs_diff_eq!(p.variance_at(x).unwrap(), r.derived.variance_at(x), epsilon = 1e-9);
            assert_abs_diff_eq!(p.drift_at(x), r.derived.drift_at(x), epsilon = 1e-10);
        }
    }

    #[test]
    fn eigenfunction_examples() {
        for r in default_rows().unwrap() {
            let x = r.derived.m1;
            assert_eq!(eigenfunction(&r, 0, x).unwrap(), 1.0, "{}", r.label());
            // φ₁ vanishes at the mean
            assert_abs_diff_eq!(eigenfunction(&r, 1, x).unwrap(), 0.0, epsilon = 1e-12);
        }
        let b = row(RowName::Hypergeometric, &[1.0, 1.0]).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(eigenfunction(&b, 1, x).unwrap(), 1.0 - 2.0 * x, epsilon = 1e-14);
        }
        let c = row(RowName::Cir, &[0.0]).unwrap();
        assert_abs_diff_eq!(eigenfunction(&c, 1, 2.5).unwrap(), -1.5, epsilon = 1e-14);
        let s = row(RowName::Student, &[3.0]).unwrap();
        assert_eq!(eigenfunction(&s, 4, 0.0), Err(Error::BeyondDiscreteSpectrum { n: 4, n_max: 3 }));
        assert!(matches!(eigenfunction(&b, 1, 1.5), Err(Error::OutOfSupport { .. })));
        let ou = row(RowName::OrnsteinUhlenbeck, &[0.0, 1.0]).unwrap();
        for x in [-1.3, 0.0, 0.7] {
            assert_abs_diff_eq!(eigenfunction(&ou, 3, x).unwrap(), x * x * x - 3.0 * x, epsilon = 1e-12);
            assert_abs_diff_eq!(eigenfunction(&ou, 4, x).unwrap(), x.powi(4) - 6.0 * x * x + 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rodrigues_matches_direct_derivative() {
        // Student n = 1: (1+x²)^{α+½} d/dx (1+x²)^{½−α} = (1−2α)x
        let r = row(RowName::Student, &[3.0]).unwrap();
        assert_abs_diff_eq!(eigenfunction(&r, 1, 0.8).unwrap(), -5.0 * 0.8, epsilon = 1e-12);
        // inverse gamma n = 1: 1 − (2α−1)x
        let r = row(RowName::ReciprocalGamma, &[3.0]).unwrap();
        assert_abs_diff_eq!(eigenfunction(&r, 1, 0.4).unwrap(), 1.0 - 5.0 * 0.4, epsilon = 1e-12);
    }

    #[test]
    fn ode_residuals() {
        for r in default_rows().unwrap() {
            let n_top = r.n_max_discrete.unwrap_or(3).min(3);
            let m = r.spec().moments().unwrap();
            for n in 0..=n_top {
                let phi = |x: f64| eigenfunction(&r, n, x).unwrap();
                let lambda = r.derived_lambda_n(n);
                let scale = m.std_dev();
                let mut worst: f64 = 0.0;
                for i in 1..40 {
                    let x = m.m1 + (i as f64 / 20.0 - 1.0) * scale;
                    if !(x - 1e-3 * scale > r.spec().support().lower && x + 1e-3 * scale < r.spec().support().upper) {
                        continue;
                    }
                    let norm = phi(x).abs().max(1.0) * lambda.abs().max(1.0);
                    worst = worst.max(r.derived.ode_residual(phi, lambda, x, 1e-3 * scale).abs() / norm);
                }
                assert!(worst <= 1e-6, "{} n={n}: {worst}", r.label());
            }
        }
    }

    #[test]
    fn tabulated_lambda_n_matches_derived_where_consistent() {
        for name in [RowName::Hypergeometric, RowName::Jacobi, RowName::Cir, RowName::OrnsteinUhlenbeck, RowName::Student, RowName::ReciprocalGamma] {
            let r = row(name, name.default_params()).unwrap();
            for n in 0..=r.n_max_discrete.unwrap_or(4) {
                assert_relative_eq!(r.lambda_n(n) + 1.0, r.derived_lambda_n(n) + 1.0, max_relative = 1e-12);
            }
        }
        let f = row(RowName::FisherSnedecor, &[6.0, 10.0]).unwrap();
        assert!((f.lambda_n(1) - f.derived_lambda_n(1)).abs() > 1.0);
    }

    #[test]
    fn orthogonality() {
        for name in [RowName::Hypergeometric, RowName::Jacobi, RowName::Cir, RowName::OrnsteinUhlenbeck] {
            let r = row(name, name.default_params()).unwrap();
            for m in 0..=4 {
                for n in 0..m {
                    let ip = r
                        .spec()
                        .expect(|x| eigenfunction(&r, m, x).unwrap() * eigenfunction(&r, n, x).unwrap())
                        .unwrap();
                    assert!(ip.abs() <= 1e-7, "{} ({m},{n}): {ip}", r.label());
                }
            }
        }
    }

    #[test]
    fn cubic_examples() {
        let c = cubic_example(1.0, 2.0, 0.0).unwrap();
        assert_eq!(c.variance_coeffs(), [0.0, 1.0, -1.0, 0.0]);
        let beta = DistributionSpec::beta(0.0, 1.0).unwrap().moments().unwrap();
        assert_abs_diff_eq!(c.m1, beta.m1, epsilon = 1e-12);
        for (a, b, s) in [(1.0, 2.0, 0.5), (2.0, 3.0, -0.3), (0.5, 1.0, 0.9)] {
            let c = cubic_example(a, b, s).unwrap();
            assert_abs_diff_eq!(c.lambda1, a + b * (1.0 - s), epsilon = 1e-9);
            let p = synthesize(&c.spec, c.sigma_hat_sq_half).unwrap();
            for x in [0.05, 0.3, 0.77] {
                assert_abs_diff_eq!(p.variance_at(x).unwrap(), c.variance_at(x), epsilon = 1e-9);
                assert_abs_diff_eq!(p.drift_at(x), c.drift.eval(x), epsilon = 1e-9);
            }
            assert!((c.printed_drift.eval(0.5) - c.drift.eval(0.5)).abs() > 0.1);
        }
    }

    #[test]
    fn cubic_spectral_gap() {
        let c = cubic_example(1.0, 2.0, 0.5).unwrap();
        let p = synthesize(&c.spec, c.sigma_hat_sq_half).unwrap();
        let gap = process_spectrum(&p, 2000, 2).unwrap().gap();
        assert!((gap / c.lambda1 - 1.0).abs() <= 0.01, "{gap} vs {}", c.lambda1);
    }

    #[test]
    fn hyperexponential_examples() {
        let h = hyperexponential(0.5, 0.5, 1.0, 1.0).unwrap();
        for x in [0.2, 3.0, 11.0] {
            assert_abs_diff_eq!(h.variance_fn(1.0, x), x, epsilon = 1e-12);
        }
        let h = hyperexponential(0.5, 0.5, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(h.lambda1(0.6875), 1.0, epsilon = 1e-12);
        let spec_var = h.spec.moments().unwrap().variance;
        assert_eq!(h.lambda1(0.6875), 0.6875 / h.variance);
        assert_relative_eq!(h.variance, spec_var, max_relative = 1e-14);
        let q = synthesize_with(&h.spec, 0.6875, VarianceMethod::Quadrature).unwrap();
        for i in 1..400 {
            let x = i as f64 * 0.1;
            let v = h.variance_fn(0.6875, x);
            assert!(v > 0.0);
            assert_abs_diff_eq!(v, q.variance_at(x).unwrap(), epsilon = 1e-8);
        }
        // the minus-sign form leaves a nonzero flux at the origin and misses
        // the variance budget
        assert!(h.printed_variance_fn(0.6875, 0.0) > 0.1);
        let mean = h.spec.expect(|x| h.printed_variance_fn(0.6875, x)).unwrap();
        assert!((mean - 0.6875).abs() > 0.1, "{mean}");
        assert!(matches!(hyperexponential(0.5, 0.6, 1.0, 2.0), Err(Error::BadWeights(_))));
    }
}
