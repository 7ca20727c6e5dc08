//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! eigenvalues, inverse iteration (partially pivoted LU) for the vectors.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit 2-norm; the entry of largest magnitude is positive.
    pub vector: Vec<f64>,
}

const MAX_BISECTION_STEPS: usize = 256;
const MAX_INVERSE_ITERATIONS: usize = 10;

/// Infinity norm of the tridiagonal matrix (max absolute row sum).
pub fn tridiag_norm(diag: &[f64], offdiag: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut s = diag[i].abs();
            if i > 0 {
                s += offdiag[i - 1].abs();
            }
            if i + 1 < n {
                s += offdiag[i].abs();
            }
            s
        })
        .fold(0.0, f64::max)
}

fn pivot_floor(offdiag: &[f64]) -> f64 {
    let emax = offdiag.iter().map(|e| e * e).fold(0.0, f64::max);
    (f64::MIN_POSITIVE * emax.max(1.0)).max(f64::MIN_POSITIVE)
}

/// Number of eigenvalues strictly less than `x`.
pub fn sturm_count(diag: &[f64], offdiag: &[f64], x: f64) -> usize {
    let pivmin = pivot_floor(offdiag);
    let mut count = 0;
    let mut q = diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let e = offdiag[i - 1];
        q = diag[i] - x - e * e / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], offdiag: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += offdiag[i - 1].abs();
        }
        if i + 1 < n {
            r += offdiag[i].abs();
        }
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let pad = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + f64::MIN_POSITIVE;
    (lo - pad, hi + pad)
}

/// The `index`-th smallest eigenvalue (0-based) by bisection on `[lo, hi]`.
fn bisect(diag: &[f64], offdiag: &[f64], index: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let width = hi - lo;
        if width <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + f64::MIN_POSITIVE
            || mid <= lo
            || mid >= hi
        {
            break;
        }
        if sturm_count(diag, offdiag, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// LU factorization with partial pivoting of `T − shift·I` (LAPACK `gttrf`).
struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(diag: &[f64], offdiag: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut dl = offdiag.to_vec();
        let mut du = offdiag.to_vec();
        let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        TridiagLu {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Matrix–vector product with the symmetric tridiagonal matrix.
pub fn tridiag_matvec(diag: &[f64], offdiag: &[f64], v: &[f64]) -> Vec<f64> {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut s = diag[i] * v[i];
            if i > 0 {
                s += offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += offdiag[i] * v[i + 1];
            }
            s
        })
        .collect()
}

fn residual(diag: &[f64], offdiag: &[f64], value: f64, v: &[f64]) -> f64 {
    tridiag_matvec(diag, offdiag, v)
        .iter()
        .zip(v)
        .map(|(tv, x)| (tv - value * x).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// The `k` smallest eigenpairs of the symmetric tridiagonal matrix with the
/// given diagonal and off-diagonal, eigenvalues in nondecreasing order.
pub fn tridiag_eigs(diag: &[f64], offdiag: &[f64], k: usize) -> Result<Vec<EigenPair>> {
    let n = diag.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if offdiag.len() + 1 != n {
        return Err(Error::InvalidInput(format!(
            "off-diagonal has length {}, expected {}",
            offdiag.len(),
            n - 1
        )));
    }
    if k > n {
        return Err(Error::InvalidInput(format!(
            "requested {k} eigenpairs of a {n}x{n} matrix"
        )));
    }
    if diag.iter().chain(offdiag).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    if n == 1 {
        return Ok(vec![EigenPair {
            value: diag[0],
            vector: vec![1.0],
        }]
        .into_iter()
        .take(k)
        .collect());
    }
    let norm = tridiag_norm(diag, offdiag).max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * norm;
    let res_tol = 1e-10 * norm;
    let (glo, ghi) = gershgorin(diag, offdiag);

    let mut pairs: Vec<EigenPair> = Vec::with_capacity(k);
    let mut lower = glo;
    for index in 0..k {
        let value = bisect(diag, offdiag, index, lower, ghi);
        lower = value - 2.0 * f64::EPSILON * value.abs().max(norm * 1e-300);
        lower = lower.min(value);

        let lu = TridiagLu::factor(diag, offdiag, value, tiny);
        // deterministic, non-degenerate start vector
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_894_9 + index as f64).sin())
            .collect();
        normalize(&mut v);
        let mut converged = false;
        let mut last_res = f64::INFINITY;
        for iteration in 0..MAX_INVERSE_ITERATIONS {
            lu.solve(&mut v);
            for p in &pairs {
                let dot: f64 = p.vector.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(&p.vector).for_each(|(x, y)| *x -= dot * y);
            }
            if normalize(&mut v) == 0.0 || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::ConvergenceFailure(format!(
                    "inverse iteration collapsed for eigenvalue {index}"
                )));
            }
            last_res = residual(diag, offdiag, value, &v);
            if last_res <= res_tol && iteration >= 1 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ConvergenceFailure(format!(
                "eigenvector {index} residual {last_res:e} exceeds {res_tol:e}"
            )));
        }
        let (imax, _) =
            v.iter().enumerate().fold(
                (0, 0.0),
                |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc },
            );
        if v[imax] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        pairs.push(EigenPair { value, vector: v });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn second_difference_three_by_three() {
        // closed form 2 − 2cos(kπ/4), k = 1, 2, 3
        let pairs = tridiag_eigs(&[2.0, 2.0, 2.0], &[-1.0, -1.0], 3).unwrap();
        let expected: Vec<f64> = (1..=3)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / 4.0).cos())
            .collect();
        for (p, e) in pairs.iter().zip(&expected) {
            assert_abs_diff_eq!(p.value, *e, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(pairs[0].value, 2.0 - 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(pairs[2].value, 2.0 + 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn one_by_one() {
        let pairs = tridiag_eigs(&[5.0], &[], 1).unwrap();
        assert_eq!(pairs[0].value, 5.0);
        assert_eq!(pairs[0].vector, vec![1.0]);
    }

    #[test]
    fn decoupled_degenerate_pair() {
        let pairs = tridiag_eigs(&[1.0, 1.0], &[0.0], 2).unwrap();
        assert_abs_diff_eq!(pairs[0].value, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pairs[1].value, 1.0, epsilon = 1e-15);
        let dot: f64 = pairs[0]
            .vector
            .iter()
            .zip(&pairs[1].vector)
            .map(|(a, b)| a * b)
            .sum();
        assert_abs_diff_eq!(dot, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(tridiag_eigs(&[1.0, 2.0], &[], 1).is_err());
        assert!(tridiag_eigs(&[1.0, 2.0], &[0.5], 3).is_err());
    }

    #[test]
    fn large_second_difference_matches_closed_form() {
        let n = 500;
        let pairs = tridiag_eigs(&vec![2.0; n], &vec![-1.0; n - 1], 5).unwrap();
        for (k, p) in pairs.iter().enumerate() {
            let theta = (k as f64 + 1.0) * std::f64::consts::PI / (n as f64 + 1.0);
            assert_abs_diff_eq!(p.value, 2.0 - 2.0 * theta.cos(), epsilon = 1e-13);
        }
    }

    fn random_tridiag() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize)> {
        (2usize..200).prop_flat_map(|n| {
            (
                proptest::collection::vec(-10.0f64..10.0, n),
                proptest::collection::vec(-5.0f64..5.0, n - 1),
                1usize..=n.min(6),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn residuals_and_ordering((d, e, k) in random_tridiag()) {
            let pairs = tridiag_eigs(&d, &e, k).unwrap();
            let norm = tridiag_norm(&d, &e);
            for w in pairs.windows(2) {
                prop_assert!(w[0].value <= w[1].value);
            }
            for p in &pairs {
                let nv: f64 = p.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!((nv - 1.0).abs() < 1e-12);
                prop_assert!(residual(&d, &e, p.value, &p.vector) <= 1e-10 * norm);
            }
            // eigenvalue count agrees with the Sturm sequence
            let last = pairs.last().unwrap().value;
            prop_assert!(sturm_count(&d, &e, last + 1e-9 * norm) >= k);
        }
    }
}
