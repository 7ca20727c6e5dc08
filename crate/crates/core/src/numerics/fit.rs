//! Least-squares exponential decay fits and finite differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fitted exponential decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub stderr: f64,
    /// Time range of the samples that entered the fit.
    pub fit_window: (f64, f64),
}

/// Ordinary least squares fit of `ln(values)` against `times`; the rate is
/// the negated slope.
pub fn fit_exponential_decay(times: &[f64], values: &[f64]) -> Result<RateEstimate> {
    if times.len() != values.len() {
        return Err(Error::InvalidInput(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if times.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "need at least 4 samples, got {}",
            times.len()
        )));
    }
    if let Some(i) = values.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveValues {
            index: i,
            value: values[i],
        });
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "times must be strictly increasing".into(),
        ));
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (slope, stderr) = ols_slope(times, &logs);
    Ok(RateEstimate {
        rate: -slope,
        stderr,
        fit_window: (times[0], times[times.len() - 1]),
    })
}

/// Slope of the least-squares line through `(x, y)` and its standard error.
fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - xm) * (yi - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    let stderr = if x.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, stderr)
}

/// Second-order centered first derivative.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Second-order centered second derivative.
pub fn second_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_exponential() {
        let t = [0.0f64, 0.5, 1.0, 1.5];
        let v: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        let fit = fit_exponential_decay(&t, &v).unwrap();
        assert_abs_diff_eq!(fit.rate, 2.0, epsilon = 1e-10);
        assert!(fit.stderr < 1e-10);
        assert_eq!(fit.fit_window, (0.0, 1.5));
    }

    #[test]
    fn amplitude_invariant() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        assert_abs_diff_eq!(
            fit_exponential_decay(&t, &v).unwrap().rate,
            0.7,
            epsilon = 1e-12
        );
    }

    #[test]
    fn noisy_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(20_240_517);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t
            .iter()
            .map(|t| (-t).exp() * (1.0 + noise.sample(&mut rng)))
            .collect();
        let fit = fit_exponential_decay(&t, &v).unwrap();
        assert!((0.97..=1.03).contains(&fit.rate), "rate {}", fit.rate);
        assert!(fit.stderr > 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let t = [0.0, 1.0, 2.0, 3.0];
        assert!(matches!(
            fit_exponential_decay(&t, &[1.0, 0.5, 0.0, 0.1]),
            Err(Error::NonPositiveValues { index: 2, .. })
        ));
        assert!(fit_exponential_decay(&t[..3], &[1.0, 0.5, 0.2]).is_err());
        assert!(fit_exponential_decay(&[0.0, 1.0, 1.0, 2.0], &[1.0, 0.5, 0.4, 0.2]).is_err());
    }

    #[test]
    fn finite_differences_are_second_order() {
        let e1 = (central_difference(f64::sin, 0.7, 1e-2) - 0.7f64.cos()).abs();
        let e2 = (central_difference(f64::sin, 0.7, 5e-3) - 0.7f64.cos()).abs();
        assert!((e1 / e2 - 4.0).abs() < 0.1);
        assert_abs_diff_eq!(
            second_difference(|x| x * x * x, 2.0, 1e-3),
            12.0,
            epsilon = 1e-6
        );
    }

    proptest! {
        #[test]
        fn scale_invariance(scale in 1e-6f64..1e6, rate in 0.1f64..5.0, wiggle in 0.0f64..0.2) {
            let t: Vec<f64> = (0..12).map(|i| i as f64 * 0.25).collect();
            let v: Vec<f64> = t.iter().enumerate()
                .map(|(i, t)| (-rate * t).exp() * (1.0 + wiggle * ((i * 7 % 5) as f64 - 2.0) / 4.0))
                .collect();
            let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
            let a = fit_exponential_decay(&t, &v).unwrap();
            let b = fit_exponential_decay(&t, &scaled).unwrap();
            prop_assert!((a.rate - b.rate).abs() <= 1e-9 * a.rate.abs().max(1.0));
        }
    }
}
