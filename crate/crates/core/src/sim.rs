//! Euler–Maruyama simulation of `dX = μ(X) dt + √(2V(X)) dW` with
//! reflecting ends, stationary statistics, and relaxation-rate estimation
//! from the autocorrelation of `φ₁(X)`.
//!
//! Paths are independent: path `i` draws from its own ChaCha8 stream seeded
//! with `seed ^ i`, and per-path results are reduced in path order, so the
//! output does not depend on the number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fit_exponential_decay, integrate_with, RateEstimate, Tolerance};
use crate::optimal::{phi1_from_moments, Diffusion, LinearFunction};
use crate::Support;

/// Consecutive rejected steps tolerated in [`BoundaryMode::RejectStep`].
pub const MAX_REJECTIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Mirror the state about the violated end.
    Reflect,
    /// Redraw the noise for a step that leaves the support.
    RejectStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    /// Steps per path.
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Steps per path discarded before statistics are collected.
    pub burn_in: usize,
    pub boundary_mode: BoundaryMode,
    /// Keep every `record_every`-th post-burn-in state.
    pub record_every: usize,
    /// Largest autocorrelation lag, in recorded samples.
    pub max_lag: usize,
    pub histogram_bins: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            n_steps: 1_000_000,
            n_paths: 1,
            seed: 0,
            burn_in: 10_000,
            boundary_mode: BoundaryMode::Reflect,
            record_every: 1,
            max_lag: 5_000,
            histogram_bins: 50,
            threads: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.n_paths == 0 {
            return bad("at least one path is required".into());
        }
        if self.burn_in >= self.n_steps {
            return bad(format!(
                "burn-in ({}) must be shorter than the run ({} steps)",
                self.burn_in, self.n_steps
            ));
        }
        if self.record_every == 0 || self.histogram_bins == 0 {
            return bad("record_every and histogram_bins must be positive".into());
        }
        if (self.n_steps - self.burn_in) / self.record_every < 2 {
            return bad("fewer than two recorded samples per path".into());
        }
        if self.threads == Some(0) {
            return bad("thread count must be positive".into());
        }
        Ok(())
    }

    /// Time between recorded samples.
    pub fn sample_interval(&self) -> f64 {
        self.dt * self.record_every as f64
    }
}

/// Fraction of recorded states per bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lower: f64,
    pub upper: f64,
    pub freq: Vec<f64>,
    /// States outside `[lower, upper]`.
    pub outside: f64,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.upper - self.lower) / self.freq.len() as f64
    }

    /// `(bin_lo, bin_hi, freq)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let w = self.bin_width();
        self.freq
            .iter()
            .enumerate()
            .map(move |(i, f)| (self.lower + i as f64 * w, self.lower + (i + 1) as f64 * w, *f))
    }

    /// `½ Σ |fᵢ − Pᵢ|` against bin probabilities from `cdf`.
    pub fn total_variation<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let mut tv = self.outside - (1.0 - cdf(self.upper) + cdf(self.lower));
        tv = tv.abs();
        for (lo, hi, f) in self.rows() {
            tv += (f - (cdf(hi) - cdf(lo))).abs();
        }
        0.5 * tv
    }
}

/// Statistics of the post-burn-in part of all paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub m1_hat: f64,
    pub m2_hat: f64,
    /// Batch-means standard error of `m1_hat`.
    pub m1_stderr: f64,
    pub n_samples: usize,
    pub histogram: Histogram,
    /// `C(s) = ⟨φ₁(X_t) φ₁(X_{t+s})⟩` at lags `s = k·lag_interval`.
    pub autocorr: Vec<f64>,
    pub lag_interval: f64,
    pub phi1: LinearFunction,
    pub final_states: Vec<f64>,
}

impl TrajectoryStats {
    /// `(lag time, C)` rows.
    pub fn autocorr_rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.autocorr
            .iter()
            .enumerate()
            .map(move |(k, c)| (k as f64 * self.lag_interval, *c))
    }
}

struct PathResult {
    sum: f64,
    sum_sq: f64,
    batch_sums: Vec<f64>,
    batch_len: usize,
    counts: Vec<u64>,
    outside: u64,
    lag_sums: Vec<f64>,
    n: usize,
    last: f64,
}

const BATCHES_PER_PATH: usize = 10;

/// `φ₁` of the stationary density, from its moments over the process window.
pub fn stationary_phi1(process: &dyn Diffusion) -> Result<LinearFunction> {
    let (a, b) = process.window();
    let tol = Tolerance::new(1e-14, 1e-12);
    let m0 = integrate_with(|x| process.stationary_density(x), a, b, tol)?.value;
    let m1 = integrate_with(|x| x * process.stationary_density(x), a, b, tol)?.value / m0;
    let m2 = integrate_with(|x| x * x * process.stationary_density(x), a, b, tol)?.value / m0;
    phi1_from_moments(m1, m2)
}

fn histogram_range(process: &dyn Diffusion) -> (f64, f64) {
    let Support { lower, upper } = process.support();
    let (a, b) = process.window();
    (
        if lower.is_finite() { lower } else { a },
        if upper.is_finite() { upper } else { b },
    )
}

/// Simulates `cfg.n_paths` paths from `x0`, with `φ₁` taken from the
/// stationary density.
pub fn simulate(process: &dyn Diffusion, cfg: &SimConfig, x0: f64) -> Result<TrajectoryStats> {
    let phi1 = stationary_phi1(process)?;
    simulate_from(process, cfg, &vec![x0; cfg.n_paths], phi1)
}

/// Simulates one path per entry of `starts`, recording the observable `phi1`.
pub fn simulate_from(
    process: &dyn Diffusion,
    cfg: &SimConfig,
    starts: &[f64],
    phi1: LinearFunction,
) -> Result<TrajectoryStats> {
    cfg.validate()?;
    if starts.len() != cfg.n_paths {
        return Err(Error::InvalidInput(format!(
            "{} start points for {} paths",
            starts.len(),
            cfg.n_paths
        )));
    }
    let support = process.support();
    if let Some(&x) = starts.iter().find(|&&x| !support.contains(x) || !x.is_finite()) {
        return Err(Error::OutOfSupport {
            x,
            lower: support.lower,
            upper: support.upper,
        });
    }
    let range = histogram_range(process);
    let run = || -> Result<Vec<PathResult>> {
        starts
            .par_iter()
            .enumerate()
            .map(|(i, &x0)| run_path(process, cfg, i, x0, phi1, range))
            .collect()
    };
    let results = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::NumericalFailure(e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    let n_total: usize = results.iter().map(|r| r.n).sum();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut counts = vec![0u64; cfg.histogram_bins];
    let mut outside = 0u64;
    let max_lag = results[0].lag_sums.len();
    let mut lag_sums = vec![0.0; max_lag];
    let mut batch_means = Vec::new();
    for r in &results {
        sum += r.sum;
        sum_sq += r.sum_sq;
        outside += r.outside;
        for (c, rc) in counts.iter_mut().zip(&r.counts) {
            *c += rc;
        }
        for (l, rl) in lag_sums.iter_mut().zip(&r.lag_sums) {
            *l += rl;
        }
        batch_means.extend(r.batch_sums.iter().map(|s| s / r.batch_len as f64));
    }
    let m1_hat = sum / n_total as f64;
    let nb = batch_means.len() as f64;
    let bm = batch_means.iter().sum::<f64>() / nb;
    let m1_stderr = (batch_means.iter().map(|b| (b - bm).powi(2)).sum::<f64>() / (nb - 1.0) / nb).sqrt();
    let per_path = results[0].n;
    let autocorr = lag_sums
        .iter()
        .enumerate()
        .map(|(k, s)| s / (cfg.n_paths * (per_path - k)) as f64)
        .collect();
    Ok(TrajectoryStats {
        m1_hat,
        m2_hat: sum_sq / n_total as f64,
        m1_stderr,
        n_samples: n_total,
        histogram: Histogram {
            lower: range.0,
            upper: range.1,
            freq: counts.iter().map(|&c| c as f64 / n_total as f64).collect(),
            outside: outside as f64 / n_total as f64,
        },
        autocorr,
        lag_interval: cfg.sample_interval(),
        phi1,
        final_states: results.iter().map(|r| r.last).collect(),
    })
}

fn reflect(mut x: f64, lower: f64, upper: f64) -> f64 {
    // a single step can overshoot both ends only on tiny intervals
    for _ in 0..64 {
        if x < lower {
            x = 2.0 * lower - x;
        } else if x > upper {
            x = 2.0 * upper - x;
        } else {
            return x;
        }
    }
    x.clamp(lower, upper)
}

fn run_path(
    process: &dyn Diffusion,
    cfg: &SimConfig,
    index: usize,
    x0: f64,
    phi1: LinearFunction,
    range: (f64, f64),
) -> Result<PathResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ index as u64);
    let Support { lower, upper } = process.support();
    let dt = cfg.dt;
    let sqrt_dt = dt.sqrt();
    let n_rec = (cfg.n_steps - cfg.burn_in) / cfg.record_every;
    let mut series = Vec::with_capacity(n_rec);
    let mut x = x0;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let bins = cfg.histogram_bins;
    let mut counts = vec![0u64; bins];
    let mut outside = 0u64;
    let width = (range.1 - range.0) / bins as f64;

    for step in 1..=cfg.n_steps {
        let mu = process.drift(x);
        let amp = (2.0 * process.half_variance(x)).sqrt();
        let mut rejections = 0;
        x = loop {
            let xi: f64 = StandardNormal.sample(&mut rng);
            let trial = x + mu * dt + amp * sqrt_dt * xi;
            if trial >= lower && trial <= upper {
                break trial;
            }
            match cfg.boundary_mode {
                BoundaryMode::Reflect => break reflect(trial, lower, upper),
                BoundaryMode::RejectStep => {
                    rejections += 1;
                    if rejections > MAX_REJECTIONS {
                        return Err(Error::BoundaryViolation(step));
                    }
                }
            }
        };
        if !x.is_finite() {
            return Err(Error::NonFiniteState(step));
        }
        if step > cfg.burn_in && (step - cfg.burn_in).is_multiple_of(cfg.record_every) && series.len() < n_rec {
            sum += x;
            sum_sq += x * x;
            let b = ((x - range.0) / width).floor();
            if b >= 0.0 && (b as usize) < bins {
                counts[b as usize] += 1;
            } else if x == range.1 {
                counts[bins - 1] += 1;
            } else {
                outside += 1;
            }
            series.push(phi1.eval(x));
        }
    }

    let n = series.len();
    let batch_len = n / BATCHES_PER_PATH;
    let batch_sums = if batch_len > 0 {
        (0..BATCHES_PER_PATH)
            .map(|b| {
                series[b * batch_len..(b + 1) * batch_len]
                    .iter()
                    .map(|p| (p - phi1.intercept) / phi1.slope)
                    .sum()
            })
            .collect()
    } else {
        Vec::new()
    };
    let max_lag = cfg.max_lag.min(n - 1) + 1;
    Ok(PathResult {
        sum,
        sum_sq,
        batch_sums,
        batch_len: batch_len.max(1),
        counts,
        outside,
        lag_sums: lag_products(&series, max_lag),
        n,
        last: x,
    })
}

/// `Σ_t y_t y_{t+k}` for `k < max_lag`, via zero-padded FFT.
pub fn lag_products(y: &[f64], max_lag: usize) -> Vec<f64> {
    let n = y.len();
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut buf: Vec<Complex<f64>> = y
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    fwd.process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    inv.process(&mut buf);
    buf.iter().take(max_lag).map(|c| c.re / size as f64).collect()
}

/// Fits `ln C(s)` over the lags from the first `C ≤ 0.8` up to (excluding)
/// the first `C < 0.05`.
pub fn fit_autocorrelation(stats: &TrajectoryStats) -> Result<RateEstimate> {
    let c = &stats.autocorr;
    let Some(start) = c.iter().position(|&v| v <= 0.8) else {
        let min = c.iter().copied().fold(f64::INFINITY, f64::min);
        return Err(Error::InsufficientDecay(min));
    };
    let end = c[start..]
        .iter()
        .position(|&v| v < 0.05)
        .map_or(c.len(), |k| start + k);
    let (t, v): (Vec<f64>, Vec<f64>) = (start..end)
        .map(|k| (k as f64 * stats.lag_interval, c[k]))
        .unzip();
    if t.len() < 4 {
        return Err(Error::InsufficientDecay(c[end.min(c.len() - 1)]));
    }
    fit_exponential_decay(&t, &v)
}

/// Simulates from the stationary mean and fits the `φ₁` autocorrelation.
pub fn estimate_rate(process: &dyn Diffusion, cfg: &SimConfig) -> Result<RateEstimate> {
    let phi1 = stationary_phi1(process)?;
    let x0 = phi1.root().unwrap_or(0.0);
    let stats = simulate_from(process, cfg, &vec![x0; cfg.n_paths], phi1)?;
    fit_autocorrelation(&stats)
}
