//! Stationary densities: the Pearson catalog, the cubic-variance and
//! hyperexponential examples, tabulated densities and finite mixtures.
//!
//! The Beta and Jacobi kinds use exponent parameters, i.e. Beta(α, β) has
//! density `x^α (1−x)^β / B(α+1, β+1)` on `[0, 1]`.

use serde::{Deserialize, Serialize};
use statrs::function::{
    beta::{beta_reg, ln_beta},
    erf::erfc,
    gamma::{gamma_lr, gamma_ur, ln_gamma},
};

use crate::error::{Error, Result};
use crate::numerics::quadrature::{
    gauss_legendre5, integrate_power_ends_offsets, integrate_scaled, Tolerance,
};
use crate::numerics::{hyp2f1, Grid, GridFunction, Pchip};

/// Relative accuracy requested from density quadratures.
const QUAD_REL: f64 = 1e-12;
/// Allowed normalization defect for a freshly built density.
const NORMALIZATION_TOL: f64 = 1e-8;

/// The interval on which a density lives; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lower: f64,
    pub upper: f64,
}

impl Support {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower >= upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(Error::InvalidInterval { a: lower, b: upper });
        }
        Ok(Support { lower, upper })
    }

    pub fn unit() -> Self {
        Support { lower: 0.0, upper: 1.0 }
    }

    pub fn half_line() -> Self {
        Support {
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }

    pub fn real_line() -> Self {
        Support {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    /// True when `x` lies in the closed interval.
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// First two moments of a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub m1: f64,
    pub m2: f64,
    pub variance: f64,
}

impl MomentSummary {
    /// Builds the summary from the mean and the central second moment;
    /// `variance` is then re-derived as `m2 − m1²`.
    pub fn from_mean_variance(m1: f64, variance: f64) -> Result<Self> {
        let m2 = m1 * m1 + variance;
        Self::from_raw(m1, m2)
    }

    pub fn from_raw(m1: f64, m2: f64) -> Result<Self> {
        let variance = m2 - m1 * m1;
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::DegenerateDistribution(variance));
        }
        Ok(MomentSummary { m1, m2, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// A density given as a table, interpolated by a monotone cubic and
/// renormalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    pchip: Pchip,
    norm: f64,
    cumulative: Vec<f64>,
    moments: MomentSummary,
}

impl TabulatedDensity {
    fn new(f: &GridFunction) -> Result<Self> {
        if let Some(i) = f.values().iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "tabulated density is negative at index {i}"
            )));
        }
        let pchip = Pchip::new(f);
        let xs = f.grid().points();
        let mut cumulative = Vec::with_capacity(xs.len());
        cumulative.push(0.0);
        let (mut mass, mut first) = (0.0, 0.0);
        for w in xs.windows(2) {
            mass += gauss_legendre5(|x| pchip.eval(x), w[0], w[1]);
            first += gauss_legendre5(|x| x * pchip.eval(x), w[0], w[1]);
            cumulative.push(mass);
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidInput("tabulated density has zero mass".into()));
        }
        cumulative.iter_mut().for_each(|c| *c /= mass);
        let m1 = first / mass;
        let central: f64 = xs
            .windows(2)
            .map(|w| gauss_legendre5(|x| (x - m1).powi(2) * pchip.eval(x), w[0], w[1]))
            .sum::<f64>()
            / mass;
        let moments = MomentSummary::from_mean_variance(m1, central)?;
        Ok(TabulatedDensity {
            pchip,
            norm: mass,
            cumulative,
            moments,
        })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.pchip.lower() || x > self.pchip.upper() {
            return 0.0;
        }
        self.pchip.eval(x) / self.norm
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let knots = self.pchip.knots();
        if x <= knots[0] {
            return 0.0;
        }
        if x >= knots[knots.len() - 1] {
            return 1.0;
        }
        let i = knots.partition_point(|&k| k <= x) - 1;
        let partial = gauss_legendre5(|t| self.pchip.eval(t), knots[i], x) / self.norm;
        (self.cumulative[i] + partial).clamp(0.0, 1.0)
    }

    /// Interpolation nodes; the interpolant is a cubic on each cell.
    pub fn knots(&self) -> &[f64] {
        self.pchip.knots()
    }
}

/// Which density a [`DistributionSpec`] describes.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    /// `x^α (1−x)^β / B(α+1, β+1)` on `[0, 1]`.
    Beta { alpha: f64, beta: f64 },
    /// `(1−x)^α (1+x)^β / (2^{α+β+1} B(α+1, β+1))` on `[−1, 1]`.
    Jacobi { alpha: f64, beta: f64 },
    /// `x^α e^{−x} / Γ(α+1)` on `[0, ∞)`.
    Gamma { alpha: f64 },
    Normal { x0: f64, sigma: f64 },
    /// `(1+x²)^{−(α+½)} / B(α, ½)` on the real line.
    StudentCauchy { alpha: f64 },
    /// `x^{−(2α+1)} e^{−1/x} / Γ(2α)` on `[0, ∞)`.
    InverseGamma { alpha: f64 },
    FisherSnedecor { nu1: f64, nu2: f64 },
    /// `p₁η₁e^{−η₁x} + p₂η₂e^{−η₂x}` on `[0, ∞)`.
    Hyperexponential { p1: f64, p2: f64, eta1: f64, eta2: f64 },
    /// `x^{α−1}(1−x)^{β−1}(1−ax)^{−(α+β+1)} / Z` on `[0, 1]`.
    CubicPearson { alpha: f64, beta: f64, a: f64 },
    Custom(CustomDensity),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CustomDensity {
    Tabulated(TabulatedDensity),
    Mixture {
        components: Vec<DistributionSpec>,
        weights: Vec<f64>,
    },
}

/// An immutable, normalized stationary density.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    kind: DistributionKind,
    support: Support,
    ln_norm: f64,
}

fn out_of_range(msg: String) -> Error {
    Error::ParamOutOfRange(msg)
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(out_of_range(format!("{name} = {v} is not finite")))
    }
}

/// Substitution power that regularizes an endpoint factor `d^p`.
fn end_power(p: f64) -> f64 {
    if p >= 0.0 && p.fract() == 0.0 {
        1.0
    } else {
        (2.0 / (1.0 + p)).clamp(2.0, 200.0)
    }
}

/// Normalizer `B(α, β)·₂F₁(α+β+1, α; α+β; a)` of the cubic-variance density.
pub(crate) fn cubic_ln_norm(alpha: f64, beta: f64, a: f64) -> Result<f64> {
    Ok(ln_beta(alpha, beta) + hyp2f1(alpha + beta + 1.0, alpha, alpha + beta, a)?.ln())
}

impl DistributionSpec {
    pub fn new(kind: DistributionKind) -> Result<Self> {
        use DistributionKind::*;
        let (support, ln_norm) = match &kind {
            Beta { alpha, beta } | Jacobi { alpha, beta } => {
                check_finite("alpha", *alpha)?;
                check_finite("beta", *beta)?;
                if !(*alpha > -1.0 && *beta > -1.0) {
                    return Err(out_of_range(format!(
                        "need alpha, beta > -1, got ({alpha}, {beta})"
                    )));
                }
                let lb = ln_beta(alpha + 1.0, beta + 1.0);
                if matches!(kind, Beta { .. }) {
                    (Support::unit(), lb)
                } else {
                    (
                        Support { lower: -1.0, upper: 1.0 },
                        lb + (alpha + beta + 1.0) * std::f64::consts::LN_2,
                    )
                }
            }
            Gamma { alpha } => {
                check_finite("alpha", *alpha)?;
                if !(*alpha > -1.0) {
                    return Err(out_of_range(format!("need alpha > -1, got {alpha}")));
                }
                (Support::half_line(), ln_gamma(alpha + 1.0))
            }
            Normal { x0, sigma } => {
                check_finite("x0", *x0)?;
                check_finite("sigma", *sigma)?;
                if !(*sigma > 0.0) {
                    return Err(out_of_range(format!("need sigma > 0, got {sigma}")));
                }
                (
                    Support::real_line(),
                    (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln(),
                )
            }
            StudentCauchy { alpha } => {
                check_finite("alpha", *alpha)?;
                if !(*alpha >= 2.0) {
                    return Err(out_of_range(format!("need alpha >= 2, got {alpha}")));
                }
                (Support::real_line(), ln_beta(*alpha, 0.5))
            }
            InverseGamma { alpha } => {
                check_finite("alpha", *alpha)?;
                if !(*alpha >= 2.0) {
                    return Err(out_of_range(format!("need alpha >= 2, got {alpha}")));
                }
                (Support::half_line(), ln_gamma(2.0 * alpha))
            }
            FisherSnedecor { nu1, nu2 } => {
                check_finite("nu1", *nu1)?;
                check_finite("nu2", *nu2)?;
                if !(*nu1 > 0.0 && *nu2 > 0.0) {
                    return Err(out_of_range(format!(
                        "need nu1, nu2 > 0, got ({nu1}, {nu2})"
                    )));
                }
                (
                    Support::half_line(),
                    ln_beta(0.5 * nu1, 0.5 * nu2) - 0.5 * nu1 * (nu1 / nu2).ln(),
                )
            }
            Hyperexponential { p1, p2, eta1, eta2 } => {
                for (n, v) in [("p1", p1), ("p2", p2), ("eta1", eta1), ("eta2", eta2)] {
                    check_finite(n, *v)?;
                }
                if *p1 < 0.0 || *p2 < 0.0 || (p1 + p2 - 1.0).abs() > 1e-12 {
                    return Err(Error::BadWeights(format!(
                        "p1 = {p1}, p2 = {p2} must be nonnegative and sum to 1"
                    )));
                }
                if !(*eta1 > 0.0 && *eta2 > 0.0) {
                    return Err(out_of_range(format!(
                        "need eta1, eta2 > 0, got ({eta1}, {eta2})"
                    )));
                }
                (Support::half_line(), 0.0)
            }
            CubicPearson { alpha, beta, a } => {
                for (n, v) in [("alpha", alpha), ("beta", beta), ("a", a)] {
                    check_finite(n, *v)?;
                }
                if !(a.abs() < 1.0 && *alpha > 0.0 && *beta > 0.0) {
                    return Err(out_of_range(format!(
                        "need |a| < 1 and alpha, beta > 0, got ({alpha}, {beta}, {a})"
                    )));
                }
                (Support::unit(), cubic_ln_norm(*alpha, *beta, *a)?)
            }
            Custom(CustomDensity::Tabulated(t)) => (
                Support::new(t.knots()[0], t.knots()[t.knots().len() - 1])?,
                0.0,
            ),
            Custom(CustomDensity::Mixture { components, .. }) => {
                let s = components
                    .first()
                    .map(|c| c.support)
                    .ok_or_else(|| Error::BadWeights("mixture has no components".into()))?;
                (s, 0.0)
            }
        };
        let spec = DistributionSpec {
            kind,
            support,
            ln_norm,
        };
        if matches!(spec.kind, Custom(_)) {
            return Ok(spec);
        }
        let mass = spec.integrate_against(|_| 1.0, support.lower, support.upper)?;
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NumericalFailure(format!(
                "density integrates to {mass} instead of 1"
            )));
        }
        Ok(spec)
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(DistributionKind::Beta { alpha, beta })
    }

    pub fn jacobi(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(DistributionKind::Jacobi { alpha, beta })
    }

    pub fn gamma(alpha: f64) -> Result<Self> {
        Self::new(DistributionKind::Gamma { alpha })
    }

    pub fn normal(x0: f64, sigma: f64) -> Result<Self> {
        Self::new(DistributionKind::Normal { x0, sigma })
    }

    pub fn student_cauchy(alpha: f64) -> Result<Self> {
        Self::new(DistributionKind::StudentCauchy { alpha })
    }

    pub fn inverse_gamma(alpha: f64) -> Result<Self> {
        Self::new(DistributionKind::InverseGamma { alpha })
    }

    pub fn fisher_snedecor(nu1: f64, nu2: f64) -> Result<Self> {
        Self::new(DistributionKind::FisherSnedecor { nu1, nu2 })
    }

    pub fn hyperexponential(p1: f64, p2: f64, eta1: f64, eta2: f64) -> Result<Self> {
        Self::new(DistributionKind::Hyperexponential { p1, p2, eta1, eta2 })
    }

    /// Exponential density with rate `eta`.
    pub fn exponential(eta: f64) -> Result<Self> {
        Self::hyperexponential(1.0, 0.0, eta, eta)
    }

    pub fn cubic_pearson(alpha: f64, beta: f64, a: f64) -> Result<Self> {
        Self::new(DistributionKind::CubicPearson { alpha, beta, a })
    }

    /// A density tabulated on `grid`; values must be nonnegative and are
    /// rescaled to unit mass. The support is the grid's extent.
    pub fn tabulated(grid: Grid, pdf: Vec<f64>) -> Result<Self> {
        let f = GridFunction::new(grid, pdf)?;
        Self::new(DistributionKind::Custom(CustomDensity::Tabulated(
            TabulatedDensity::new(&f)?,
        )))
    }

    /// Tabulates `f` on `n` equally spaced points of `[a, b]`.
    pub fn tabulated_fn<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> Result<Self> {
        let grid = Grid::uniform(a, b, n)?;
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Self::tabulated(grid, values)
    }

    /// The convex combination `Σ wᵢ πᵢ`.
    pub fn mixture(specs: &[DistributionSpec], weights: &[f64]) -> Result<Self> {
        if specs.is_empty() || specs.len() != weights.len() {
            return Err(Error::BadWeights(format!(
                "{} components but {} weights",
                specs.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::BadWeights("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadWeights(format!("weights sum to {total}, not 1")));
        }
        let support = specs[0].support;
        if specs.iter().any(|s| s.support != support) {
            return Err(Error::SupportMismatch);
        }
        Self::new(DistributionKind::Custom(CustomDensity::Mixture {
            components: specs.to_vec(),
            weights: weights.to_vec(),
        }))
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn support(&self) -> Support {
        self.support
    }

    /// Short lowercase identifier of the kind.
    pub fn name(&self) -> &'static str {
        use DistributionKind::*;
        match self.kind {
            Beta { .. } => "beta",
            Jacobi { .. } => "jacobi",
            Gamma { .. } => "gamma",
            Normal { .. } => "normal",
            StudentCauchy { .. } => "student",
            InverseGamma { .. } => "inverse_gamma",
            FisherSnedecor { .. } => "fisher_snedecor",
            Hyperexponential { .. } => "hyperexponential",
            CubicPearson { .. } => "cubic",
            Custom(CustomDensity::Tabulated(_)) => "custom",
            Custom(CustomDensity::Mixture { .. }) => "mixture",
        }
    }

    /// Named scalar parameters (empty for custom densities).
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        use DistributionKind::*;
        match self.kind {
            Beta { alpha, beta } | Jacobi { alpha, beta } => vec![("alpha", alpha), ("beta", beta)],
            Gamma { alpha } | StudentCauchy { alpha } | InverseGamma { alpha } => {
                vec![("alpha", alpha)]
            }
            Normal { x0, sigma } => vec![("x0", x0), ("sigma", sigma)],
            FisherSnedecor { nu1, nu2 } => vec![("nu1", nu1), ("nu2", nu2)],
            Hyperexponential { p1, p2, eta1, eta2 } => {
                vec![("p1", p1), ("p2", p2), ("eta1", eta1), ("eta2", eta2)]
            }
            CubicPearson { alpha, beta, a } => vec![("alpha", alpha), ("beta", beta), ("a", a)],
            Custom(_) => Vec::new(),
        }
    }

    fn check_in_support(&self, x: f64) -> Result<()> {
        if self.support.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfSupport {
                x,
                lower: self.support.lower,
                upper: self.support.upper,
            })
        }
    }

    /// Density at `x`; `x` must lie in the closed support.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.check_in_support(x)?;
        Ok(self.density(x))
    }

    /// Density without the support check; zero outside the support.
    pub fn density(&self, x: f64) -> f64 {
        if !self.support.contains(x) {
            return 0.0;
        }
        self.density_offsets(x, x - self.support.lower, self.support.upper - x)
    }

    /// Density evaluated with the distances `dl = x − lower` and
    /// `du = upper − x` supplied separately, so that endpoint factors such as
    /// `(1−x)^β` keep full relative accuracy near the boundary.
    pub(crate) fn density_offsets(&self, x: f64, dl: f64, du: f64) -> f64 {
        use DistributionKind::*;
        let e = (-self.ln_norm).exp();
        match &self.kind {
            Beta { alpha, beta } => dl.powf(*alpha) * du.powf(*beta) * e,
            Jacobi { alpha, beta } => du.powf(*alpha) * dl.powf(*beta) * e,
            Gamma { alpha } => {
                if x == 0.0 {
                    return if *alpha == 0.0 {
                        e
                    } else if *alpha > 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                }
                (alpha * x.ln() - x - self.ln_norm).exp()
            }
            Normal { x0, sigma } => {
                let z = (x - x0) / sigma;
                (-0.5 * z * z - self.ln_norm).exp()
            }
            StudentCauchy { alpha } => (-(alpha + 0.5) * x.mul_add(x, 1.0).ln() - self.ln_norm).exp(),
            InverseGamma { alpha } => {
                if x <= 0.0 {
                    return 0.0;
                }
                (-(2.0 * alpha + 1.0) * x.ln() - 1.0 / x - self.ln_norm).exp()
            }
            FisherSnedecor { nu1, nu2 } => {
                let p = 0.5 * nu1 - 1.0;
                if x == 0.0 {
                    return if p == 0.0 {
                        e
                    } else if p > 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                }
                (p * x.ln() - 0.5 * (nu1 + nu2) * (nu1 / nu2 * x).ln_1p() - self.ln_norm).exp()
            }
            Hyperexponential { p1, p2, eta1, eta2 } => {
                p1 * eta1 * (-eta1 * x).exp() + p2 * eta2 * (-eta2 * x).exp()
            }
            CubicPearson { alpha, beta, a } => {
                dl.powf(alpha - 1.0) * du.powf(beta - 1.0) * (-a * x).ln_1p().mul_add(-(alpha + beta + 1.0), -self.ln_norm).exp()
            }
            Custom(CustomDensity::Tabulated(t)) => t.pdf(x),
            Custom(CustomDensity::Mixture { components, weights }) => components
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(c, w)| w * c.density_offsets(x, dl, du))
                .sum(),
        }
    }

    /// Exponents `(p_lower, p_upper)` of the power-law factor of the density
    /// at finite support ends (0 where the density is smooth).
    fn end_exponents(&self) -> (f64, f64) {
        use DistributionKind::*;
        match &self.kind {
            Beta { alpha, beta } => (*alpha, *beta),
            Jacobi { alpha, beta } => (*beta, *alpha),
            Gamma { alpha } => (*alpha, 0.0),
            FisherSnedecor { nu1, .. } => (0.5 * nu1 - 1.0, 0.0),
            CubicPearson { alpha, beta, .. } => (alpha - 1.0, beta - 1.0),
            Custom(CustomDensity::Mixture { components, .. }) => {
                let harder = |a: f64, b: f64| if end_power(b) > end_power(a) { b } else { a };
                components
                    .iter()
                    .map(|c| c.end_exponents())
                    .fold((0.0, 0.0), |acc, (l, u)| (harder(acc.0, l), harder(acc.1, u)))
            }
            _ => (0.0, 0.0),
        }
    }

    /// A length scale for quadrature maps and window searches.
    pub fn scale(&self) -> f64 {
        match self.moments() {
            Ok(m) if m.variance.is_finite() && m.variance > 0.0 => m.std_dev(),
            _ => 1.0,
        }
    }

    /// A representative interior location (mean, or a mode-like point).
    fn center(&self) -> f64 {
        if let Ok(m) = self.moments() {
            return m.m1;
        }
        match (self.support.lower.is_finite(), self.support.upper.is_finite()) {
            (true, true) => 0.5 * (self.support.lower + self.support.upper),
            (true, false) => self.support.lower + 1.0,
            (false, true) => self.support.upper - 1.0,
            (false, false) => 0.0,
        }
    }

    /// `∫_lo^hi g(x) π(x) dx`, with `[lo, hi]` clipped to the support.
    pub fn integrate_against<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64) -> Result<f64> {
        self.integrate_against_tol(g, lo, hi, Tolerance::new(0.0, QUAD_REL))
    }

    /// [`integrate_against`](Self::integrate_against) with an explicit tolerance.
    pub fn integrate_against_tol<G: Fn(f64) -> f64>(
        &self,
        g: G,
        lo: f64,
        hi: f64,
        tol: Tolerance,
    ) -> Result<f64> {
        let lo = lo.max(self.support.lower);
        let hi = hi.min(self.support.upper);
        if !(lo < hi) {
            return Ok(0.0);
        }
        let (pl, pu) = self.end_exponents();
        let k_lo = if lo == self.support.lower { end_power(pl) } else { 1.0 };
        let k_hi = if hi == self.support.upper { end_power(pu) } else { 1.0 };
        let s = self.scale();
        let (sl, su) = (self.support.lower, self.support.upper);
        let finite_part = |a: f64, b: f64, ka: f64, kb: f64| -> Result<f64> {
            Ok(integrate_power_ends_offsets(
                |x, dl, du| {
                    let v = self.density_offsets(x, (a - sl) + dl, (su - b) + du);
                    if v == 0.0 {
                        0.0
                    } else {
                        g(x) * v
                    }
                },
                a,
                b,
                ka,
                kb,
                tol,
            )?
            .value)
        };
        let tail = |a: f64, b: f64| -> Result<f64> {
            Ok(integrate_scaled(
                |x| {
                    let v = self.density(x);
                    if v == 0.0 {
                        0.0
                    } else {
                        g(x) * v
                    }
                },
                a,
                b,
                s,
                tol,
            )?
            .value)
        };
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => finite_part(lo, hi, k_lo, k_hi),
            (true, false) => {
                let split = lo + s;
                Ok(finite_part(lo, split, k_lo, 1.0)? + tail(split, f64::INFINITY)?)
            }
            (false, true) => {
                let split = hi - s;
                Ok(tail(f64::NEG_INFINITY, split)? + finite_part(split, hi, 1.0, k_hi)?)
            }
            (false, false) => {
                let c = self.center();
                Ok(tail(f64::NEG_INFINITY, c)? + tail(c, f64::INFINITY)?)
            }
        }
    }

    /// `E_π[g]` over the whole support.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        self.integrate_against(g, self.support.lower, self.support.upper)
    }

    /// Cumulative distribution `Π(x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        use DistributionKind::*;
        self.check_in_support(x)?;
        if x == self.support.lower {
            return Ok(0.0);
        }
        if x == self.support.upper {
            return Ok(1.0);
        }
        let v = match &self.kind {
            Beta { alpha, beta } => beta_reg(alpha + 1.0, beta + 1.0, x),
            Jacobi { alpha, beta } => beta_reg(beta + 1.0, alpha + 1.0, 0.5 * (1.0 + x)),
            Gamma { alpha } => gamma_lr(alpha + 1.0, x),
            Normal { x0, sigma } => 0.5 * erfc(-(x - x0) / (sigma * std::f64::consts::SQRT_2)),
            StudentCauchy { alpha } => {
                let x2 = x * x;
                let t = 1.0 / (1.0 + x2);
                // pick the incomplete-beta argument away from 1 to avoid cancellation
                let half_tail = if t <= 0.5 {
                    0.5 * beta_reg(*alpha, 0.5, t)
                } else {
                    0.5 - 0.5 * beta_reg(0.5, *alpha, x2 * t)
                };
                if x >= 0.0 {
                    1.0 - half_tail
                } else {
                    half_tail
                }
            }
            InverseGamma { alpha } => gamma_ur(2.0 * alpha, 1.0 / x),
            FisherSnedecor { nu1, nu2 } => beta_reg(0.5 * nu1, 0.5 * nu2, nu1 * x / (nu1 * x + nu2)),
            Hyperexponential { p1, p2, eta1, eta2 } => {
                1.0 - p1 * (-eta1 * x).exp() - p2 * (-eta2 * x).exp()
            }
            CubicPearson { .. } => {
                if x <= 0.5 {
                    self.integrate_against(|_| 1.0, 0.0, x)?
                } else {
                    1.0 - self.integrate_against(|_| 1.0, x, 1.0)?
                }
            }
            Custom(CustomDensity::Tabulated(t)) => t.cdf(x),
            Custom(CustomDensity::Mixture { components, weights }) => {
                let mut acc = 0.0;
                for (c, w) in components.iter().zip(weights) {
                    acc += w * c.cdf(x)?;
                }
                acc
            }
        };
        Ok(v.clamp(0.0, 1.0))
    }

    /// Upper-tail probability `1 − Π(x)`, accurate where it is tiny.
    pub fn survival(&self, x: f64) -> Result<f64> {
        use DistributionKind::*;
        self.check_in_support(x)?;
        match &self.kind {
            Gamma { alpha } if x > 0.0 && x.is_finite() => Ok(gamma_ur(alpha + 1.0, x)),
            Hyperexponential { p1, p2, eta1, eta2 } => {
                Ok(p1 * (-eta1 * x).exp() + p2 * (-eta2 * x).exp())
            }
            Normal { x0, sigma } => Ok(0.5 * erfc((x - x0) / (sigma * std::f64::consts::SQRT_2))),
            _ => Ok(1.0 - self.cdf(x)?),
        }
    }

    /// Closed-form (or exactly tabulated) mean and variance.
    pub fn moments(&self) -> Result<MomentSummary> {
        use DistributionKind::*;
        match &self.kind {
            Beta { alpha, beta } => {
                let s = alpha + beta + 2.0;
                MomentSummary::from_mean_variance(
                    (alpha + 1.0) / s,
                    (alpha + 1.0) * (beta + 1.0) / (s * s * (s + 1.0)),
                )
            }
            Jacobi { alpha, beta } => {
                let s = alpha + beta + 2.0;
                MomentSummary::from_mean_variance(
                    (beta - alpha) / s,
                    4.0 * (alpha + 1.0) * (beta + 1.0) / (s * s * (s + 1.0)),
                )
            }
            Gamma { alpha } => MomentSummary::from_mean_variance(alpha + 1.0, alpha + 1.0),
            Normal { x0, sigma } => MomentSummary::from_mean_variance(*x0, sigma * sigma),
            StudentCauchy { alpha } => {
                if *alpha <= 1.0 {
                    return Err(Error::MomentDivergence(format!(
                        "second moment of the Student density needs alpha > 1, got {alpha}"
                    )));
                }
                MomentSummary::from_mean_variance(0.0, 1.0 / (2.0 * (alpha - 1.0)))
            }
            InverseGamma { alpha } => {
                if *alpha <= 1.0 {
                    return Err(Error::MomentDivergence(format!(
                        "second moment of the inverse-gamma density needs alpha > 1, got {alpha}"
                    )));
                }
                let k = 2.0 * alpha - 1.0;
                MomentSummary::from_mean_variance(1.0 / k, 1.0 / (2.0 * (alpha - 1.0) * k * k))
            }
            FisherSnedecor { nu1, nu2 } => {
                if *nu2 <= 4.0 {
                    return Err(Error::MomentDivergence(format!(
                        "second moment of the F density needs nu2 > 4, got {nu2}"
                    )));
                }
                MomentSummary::from_mean_variance(
                    nu2 / (nu2 - 2.0),
                    2.0 * nu2 * nu2 * (nu1 + nu2 - 2.0) / (nu1 * (nu2 - 2.0).powi(2) * (nu2 - 4.0)),
                )
            }
            Hyperexponential { p1, p2, eta1, eta2 } => {
                let d = 1.0 / eta1 - 1.0 / eta2;
                MomentSummary::from_mean_variance(
                    p1 / eta1 + p2 / eta2,
                    p1 / (eta1 * eta1) + p2 / (eta2 * eta2) + p1 * p2 * d * d,
                )
            }
            CubicPearson { alpha, beta, a } => {
                let (m1, m2) = cubic_raw_moments(*alpha, *beta, *a)?;
                MomentSummary::from_raw(m1, m2)
            }
            Custom(CustomDensity::Tabulated(t)) => Ok(t.moments),
            Custom(CustomDensity::Mixture { components, weights }) => {
                let parts = components
                    .iter()
                    .map(|c| c.moments())
                    .collect::<Result<Vec<_>>>()?;
                let m1: f64 = parts.iter().zip(weights).map(|(m, w)| w * m.m1).sum();
                let var: f64 = parts
                    .iter()
                    .zip(weights)
                    .map(|(m, w)| w * ((m1 - m.m1).powi(2) + m.variance))
                    .sum();
                MomentSummary::from_mean_variance(m1, var)
            }
        }
    }

    /// Mean and variance by direct quadrature of `x π` and `(x − m₁)² π`.
    pub fn moments_by_quadrature(&self) -> Result<MomentSummary> {
        let m1 = self.expect(|x| x)?;
        let var = self.expect(|x| (x - m1) * (x - m1))?;
        if !var.is_finite() {
            return Err(Error::MomentDivergence("second moment is not finite".into()));
        }
        MomentSummary::from_mean_variance(m1, var)
    }

    /// The smallest interval outside which `π < rel·max π`, found by doubling
    /// outward from the centre; finite support ends are kept as they are.
    pub fn window(&self, rel: f64) -> (f64, f64) {
        let Support { lower, upper } = self.support;
        if self.support.is_bounded() {
            return (lower, upper);
        }
        let c = self.center();
        let s = self.scale();
        let lo_scan = if lower.is_finite() { lower } else { c - 30.0 * s };
        let hi_scan = if upper.is_finite() { upper } else { c + 30.0 * s };
        let pmax = (0..=4000)
            .map(|i| self.density(lo_scan + (hi_scan - lo_scan) * i as f64 / 4000.0))
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        let thresh = rel * pmax;
        let search = |dir: f64| {
            let mut off = s;
            for _ in 0..200 {
                let x = c + dir * off;
                if self.density(x) < thresh && (x - c).abs() > s {
                    return x;
                }
                off *= 2.0;
            }
            c + dir * off
        };
        let lo = if lower.is_finite() { lower } else { search(-1.0) };
        let hi = if upper.is_finite() { upper } else { search(1.0) };
        (lo, hi)
    }

    /// [`window`](Self::window) at the default relative level `1e−14`.
    pub fn default_window(&self) -> (f64, f64) {
        self.window(1e-14)
    }

    /// Inverse of the cdf by bisection on the default window.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!("probability {p} outside [0, 1]")));
        }
        let (mut lo, mut hi) = self.default_window();
        if p == 0.0 {
            return Ok(lo);
        }
        if p == 1.0 {
            return Ok(hi);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Raw moments `(m₁, m₂)` of the cubic-variance density from the Euler
/// integral representation of ₂F₁.
pub(crate) fn cubic_raw_moments(alpha: f64, beta: f64, a: f64) -> Result<(f64, f64)> {
    let ln_z = cubic_ln_norm(alpha, beta, a)?;
    let s = alpha + beta;
    let m1 = (ln_beta(alpha + 1.0, beta) - ln_z).exp() * hyp2f1(s + 1.0, alpha + 1.0, s + 1.0, a)?;
    let m2 = (ln_beta(alpha + 2.0, beta) - ln_z).exp() * hyp2f1(s + 1.0, alpha + 2.0, s + 2.0, a)?;
    Ok((m1, m2))
}
