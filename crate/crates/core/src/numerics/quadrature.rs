//! Globally adaptive Gauss–Kronrod quadrature (10-point Gauss / 21-point
//! Kronrod pair, QUADPACK-style error estimate).
//!
//! Infinite endpoints are handled by the change of variables
//! `x = a + s·t/(1−t)`, `t ∈ [0, 1)`, so the rule never samples the endpoint
//! itself. Integrable endpoint singularities of the form `(x−a)^α`, `α > −1`,
//! can be softened with [`integrate_endpoint_regular`], which applies the
//! substitution `x = a + u²` on each half of the interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Outcome of a quadrature call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

/// Mixed absolute / relative accuracy target: the error estimate must not
/// exceed `max(abs, rel·|value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Tolerance { abs, rel: 0.0 }
    }

    pub fn relative(rel: f64) -> Self {
        Tolerance { abs: 0.0, rel }
    }

    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// Maximum number of subintervals kept by the adaptive driver.
pub const MAX_SUBINTERVALS: usize = 5000;

// Kronrod abscissae on [0, 1]; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_452_138,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_271,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();

    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let fc = f(center);
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
    }
    if !resk.is_finite() || !fc.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    resabs *= abs_half;
    resasc *= abs_half;
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Segment {
        a,
        b,
        value,
        error,
        resabs,
    })
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tolerance) -> Result<QuadratureResult> {
    let first = kronrod21(f, a, b)?;
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    let mut value = first.value;
    let mut error = first.error;
    let mut resabs = first.resabs;
    heap.push(first);

    loop {
        // roundoff floor: the estimate cannot drop below a few ulps of ∫|f|
        let target = tol.target(value).max(100.0 * f64::EPSILON * resabs);
        if error <= target {
            return Ok(QuadratureResult {
                value,
                abs_error_estimate: error,
                evaluations,
            });
        }
        if heap.len() >= MAX_SUBINTERVALS {
            return Err(Error::NonConvergence {
                value,
                estimate: error,
                tolerance: tol.target(value),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // cannot bisect further at machine precision
            return Err(Error::NonConvergence {
                value,
                estimate: error,
                tolerance: tol.target(value),
            });
        }
        let left = kronrod21(f, worst.a, mid)?;
        let right = kronrod21(f, mid, worst.b)?;
        evaluations += 42;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        resabs += left.resabs + right.resabs - worst.resabs;
        heap.push(left);
        heap.push(right);
        if heap.len() % 64 == 0 {
            // refresh running sums to keep cancellation error from accumulating
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
            resabs = heap.iter().map(|s| s.resabs).sum();
        }
    }
}

/// Integrates `f` over `[a, b]` to an absolute accuracy `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    integrate_with(f, a, b, Tolerance::absolute(tol))
}

/// Integrates `f` over `[a, b]` where either endpoint may be infinite.
pub fn integrate_with<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<QuadratureResult> {
    integrate_scaled(f, a, b, 1.0, tol)
}

/// Like [`integrate_with`] with an explicit length scale for the
/// infinite-range map `x = a + scale·t/(1−t)`.
pub fn integrate_scaled<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    scale: f64,
    tol: Tolerance,
) -> Result<QuadratureResult> {
    scaled_impl(&f, a, b, scale, tol)
}

fn scaled_impl(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    scale: f64,
    tol: Tolerance,
) -> Result<QuadratureResult> {
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(Error::InvalidInterval { a, b });
    }
    let s = if scale > 0.0 && scale.is_finite() {
        scale
    } else {
        1.0
    };
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(&f, a, b, tol),
        (true, false) => {
            let g = |t: f64| {
                let one_minus = 1.0 - t;
                let x = a + s * t / one_minus;
                if !x.is_finite() {
                    return 0.0;
                }
                let v = f(x);
                if v == 0.0 {
                    0.0
                } else {
                    v * s / (one_minus * one_minus)
                }
            };
            adaptive(&g, 0.0, 1.0, tol)
        }
        (false, true) => {
            let g = |t: f64| {
                let one_minus = 1.0 - t;
                let x = b - s * t / one_minus;
                if !x.is_finite() {
                    return 0.0;
                }
                let v = f(x);
                if v == 0.0 {
                    0.0
                } else {
                    v * s / (one_minus * one_minus)
                }
            };
            adaptive(&g, 0.0, 1.0, tol)
        }
        (false, false) => {
            let left = scaled_impl(f, f64::NEG_INFINITY, 0.0, s, tol)?;
            let right = scaled_impl(f, 0.0, f64::INFINITY, s, tol)?;
            Ok(QuadratureResult {
                value: left.value + right.value,
                abs_error_estimate: left.abs_error_estimate + right.abs_error_estimate,
                evaluations: left.evaluations + right.evaluations,
            })
        }
    }
}

/// Which finite endpoints may carry an integrable power-law singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularEnds {
    pub lower: bool,
    pub upper: bool,
}

/// Integrates over a finite interval, applying `x = a + u²` (resp.
/// `x = b − u²`) on the half adjacent to each flagged endpoint.
pub fn integrate_endpoint_regular<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    ends: SingularEnds,
    tol: Tolerance,
) -> Result<QuadratureResult> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInterval { a, b });
    }
    if !ends.lower && !ends.upper {
        return adaptive(&f, a, b, tol);
    }
    let mid = 0.5 * (a + b);
    let half_tol = Tolerance::new(0.5 * tol.abs, tol.rel);
    let left = if ends.lower {
        let g = |u: f64| {
            let x = a + u * u;
            if x == a {
                0.0
            } else {
                2.0 * u * f(x)
            }
        };
        adaptive(&g, 0.0, (mid - a).sqrt(), half_tol)?
    } else {
        adaptive(&f, a, mid, half_tol)?
    };
    let right = if ends.upper {
        let g = |u: f64| {
            let x = b - u * u;
            if x == b {
                0.0
            } else {
                2.0 * u * f(x)
            }
        };
        adaptive(&g, 0.0, (b - mid).sqrt(), half_tol)?
    } else {
        adaptive(&f, mid, b, half_tol)?
    };
    Ok(QuadratureResult {
        value: left.value + right.value,
        abs_error_estimate: left.abs_error_estimate + right.abs_error_estimate,
        evaluations: left.evaluations + right.evaluations,
    })
}

/// Integrates over a finite interval with a power substitution on each half:
/// `x = a + (m − a)·u^k_lower` next to `a` and `x = b − (b − m)·u^k_upper`
/// next to `b`, where `m` is the midpoint. An integrand behaving like
/// `(x − a)^p` becomes regular when `k ≥ 2/(1 + p)`; `k = 1` leaves a half
/// untouched.
pub fn integrate_power_ends<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    k_lower: f64,
    k_upper: f64,
    tol: Tolerance,
) -> Result<QuadratureResult> {
    integrate_power_ends_offsets(|x, _, _| f(x), a, b, k_lower, k_upper, tol)
}

/// Like [`integrate_power_ends`], but the integrand also receives the
/// distances `x − a` and `b − x`, computed without cancellation near the
/// substituted endpoint. Singular factors such as `(b − x)^p` should be
/// evaluated from these rather than from `x`.
pub fn integrate_power_ends_offsets<F: Fn(f64, f64, f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    k_lower: f64,
    k_upper: f64,
    tol: Tolerance,
) -> Result<QuadratureResult> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInterval { a, b });
    }
    if !(k_lower >= 1.0 && k_upper >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "substitution powers must be >= 1, got {k_lower}, {k_upper}"
        )));
    }
    let len = b - a;
    let w = 0.5 * len;
    let half_tol = Tolerance::new(0.5 * tol.abs, tol.rel);
    let left = {
        let g = |u: f64| {
            let dl = w * u.powf(k_lower);
            if dl == 0.0 {
                return 0.0;
            }
            let jac = if k_lower > 1.0 { w * k_lower * u.powf(k_lower - 1.0) } else { w };
            jac * f(a + dl, dl, len - dl)
        };
        adaptive(&g, 0.0, 1.0, half_tol)?
    };
    let right = {
        let g = |u: f64| {
            let du = w * u.powf(k_upper);
            if du == 0.0 {
                return 0.0;
            }
            let jac = if k_upper > 1.0 { w * k_upper * u.powf(k_upper - 1.0) } else { w };
            jac * f(b - du, len - du, du)
        };
        adaptive(&g, 0.0, 1.0, half_tol)?
    };
    Ok(QuadratureResult {
        value: left.value + right.value,
        abs_error_estimate: left.abs_error_estimate + right.abs_error_estimate,
        evaluations: left.evaluations + right.evaluations,
    })
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664_0,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664_0,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Fixed 5-point Gauss–Legendre rule; exact for polynomials of degree ≤ 9.
pub fn gauss_legendre5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}
