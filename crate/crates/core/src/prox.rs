//! Closed-form minimizer of `||s - a||_2 + τ ||s||_1`.
//!
//! The problem is reduced to a nonnegative, nonincreasing `a` by sorting
//! absolute values ([`canonicalize`]); on that canonical input the optimum
//! is one of `0`, `a`, or `max(a - t_k, 0)` with a threshold `t_k` found by
//! one linear scan ([`solve_canonical`]).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::linalg::DenseMatrix;

/// Sorted-magnitude view of a vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    /// `|a|` sorted nonincreasing (stable; ties keep original order).
    pub sorted_abs: Vec<f64>,
    /// `sign(a)` in the original order.
    pub signs: Vec<i8>,
    /// `permutation[i]` is the sorted position of original index `i`.
    pub permutation: Vec<usize>,
}

impl CanonicalForm {
    /// Maps a solution of the canonical problem back to the original
    /// coordinates: `signs ⊙ P^T s`.
    pub fn restore(&self, sorted_solution: &[f64]) -> Vec<f64> {
        assert_eq!(sorted_solution.len(), self.sorted_abs.len());
        self.permutation
            .iter()
            .zip(&self.signs)
            .map(|(&pos, &sign)| f64::from(sign) * sorted_solution[pos])
            .collect()
    }
}

pub fn canonicalize(a: &[f64]) -> CanonicalForm {
    let mut order: Vec<usize> = (0..a.len()).collect();
    // Stable by construction: ties are broken by the original index.
    order.sort_unstable_by(|&x, &y| a[y].abs().total_cmp(&a[x].abs()).then(x.cmp(&y)));
    let mut permutation = vec![0usize; a.len()];
    let mut sorted_abs = Vec::with_capacity(a.len());
    for (pos, &i) in order.iter().enumerate() {
        permutation[i] = pos;
        sorted_abs.push(a[i].abs());
    }
    let signs = a
        .iter()
        .map(|&x| {
            if x > 0.0 {
                1
            } else if x < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect();
    CanonicalForm {
        sorted_abs,
        signs,
        permutation,
    }
}

/// Which closed form applies to a canonical input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProxCase {
    /// `τ >= ||a||_∞ / ||a||_2`: the optimum is `0`.
    Zero,
    /// `τ <= 1 / sqrt(||a||_0)`: the optimum is `a`.
    Identity,
    /// Otherwise: the optimum is `max(a - threshold, 0)`, with exactly `k`
    /// positive entries.
    Shrink { k: usize, threshold: f64 },
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid(alloc::format!("tau must be positive and finite, got {tau}")));
    }
    Ok(())
}

fn check_canonical(a: &[f64]) -> Result<()> {
    if a.is_empty() {
        return Err(invalid("empty vector"));
    }
    if a.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(invalid("canonical input must be finite and nonnegative"));
    }
    if a.windows(2).any(|w| w[0] < w[1]) {
        return Err(invalid("canonical input must be sorted nonincreasing"));
    }
    if a[0] == 0.0 {
        return Err(invalid("canonical input must be nonzero"));
    }
    Ok(())
}

/// Largest integer strictly below `1/τ²`, robust to `1/τ²` rounding onto an
/// integer.
pub(crate) fn largest_index_below(tau: f64) -> usize {
    let inv = 1.0 / (tau * tau);
    let m = libm::floor(inv);
    let m_int = m as usize;
    if m * tau * tau >= 1.0 - 1e-12 {
        m_int.saturating_sub(1)
    } else {
        m_int
    }
}

/// `tails[k] = Σ_{j >= k} a[j]²` for `k` in `0..=upto`, accumulated from the
/// end of `a` so small entries are summed first.
pub(crate) fn tail_sums_of_squares(a: &[f64], extra: f64, upto: usize) -> Vec<f64> {
    let n = a.len();
    let mut acc = extra;
    for &x in a[(upto + 1).min(n)..].iter().rev() {
        acc += x * x;
    }
    let mut tails = vec![0.0; upto + 1];
    for k in (0..=upto).rev() {
        if k < n {
            acc += a[k] * a[k];
        }
        tails[k] = acc;
    }
    tails
}

/// Decides the regime for a canonical input.
pub fn classify(a: &[f64], tau: f64) -> Result<ProxCase> {
    check_tau(tau)?;
    check_canonical(a)?;
    let nnz = a.iter().take_while(|&&x| x > 0.0).count();
    // Identity is tested first so the boundary τ = 1/sqrt(nnz), where a
    // whole segment of solutions exists, resolves to `a`.
    if tau <= 1.0 / libm::sqrt(nnz as f64) {
        return Ok(ProxCase::Identity);
    }
    let kbar = largest_index_below(tau).min(nnz - 1);
    let tails = tail_sums_of_squares(&a[..nnz], 0.0, kbar);
    let norm = libm::sqrt(tails[0]);
    if tau >= a[0] / norm {
        return Ok(ProxCase::Zero);
    }
    let inv = 1.0 / (tau * tau);
    Ok(first_sign_change(&a[..nnz], &tails, inv, kbar))
}

/// First `k` in `1..=kbar` with `a[k] <= t_k` (0-based `a`, so `a[k]` is the
/// `(k+1)`-th entry). The sequence `a_{k+1} - t_k` is positive up to the
/// active index and nonpositive from there on, so the first sign change is
/// the unique index of the threshold search.
fn first_sign_change(a: &[f64], tails: &[f64], inv_tau2: f64, kbar: usize) -> ProxCase {
    let n = a.len();
    for k in 1..=kbar {
        let t = libm::sqrt(tails[k] / (inv_tau2 - k as f64));
        let next = if k < n { a[k] } else { 0.0 };
        if next <= t {
            debug_assert!(t < a[k - 1] * (1.0 + 1e-12), "threshold not below a_k");
            return ProxCase::Shrink { k, threshold: t };
        }
    }
    // Unreachable in exact arithmetic: a_{kbar+1} <= t_kbar always holds.
    let t = libm::sqrt(tails[kbar] / (inv_tau2 - kbar as f64));
    ProxCase::Shrink {
        k: kbar,
        threshold: t,
    }
}

/// Number of `k` in `1..=kbar` satisfying `a_{k+1} <= t_k < a_k` exactly.
/// The closed form promises exactly one in the shrink regime; exposed for
/// verification.
pub fn count_threshold_indices(a: &[f64], tau: f64) -> Result<usize> {
    check_tau(tau)?;
    check_canonical(a)?;
    let nnz = a.iter().take_while(|&&x| x > 0.0).count();
    if nnz <= 1 {
        return Ok(0);
    }
    let kbar = largest_index_below(tau).min(nnz - 1);
    let tails = tail_sums_of_squares(&a[..nnz], 0.0, kbar);
    let inv = 1.0 / (tau * tau);
    Ok((1..=kbar)
        .filter(|&k| {
            let t = libm::sqrt(tails[k] / (inv - k as f64));
            let next = if k < nnz { a[k] } else { 0.0 };
            next <= t && t < a[k - 1]
        })
        .count())
}

fn apply_case(a: &[f64], case: ProxCase) -> Vec<f64> {
    match case {
        ProxCase::Zero => vec![0.0; a.len()],
        ProxCase::Identity => a.to_vec(),
        ProxCase::Shrink { k, threshold } => a
            .iter()
            .enumerate()
            .map(|(i, &x)| if i < k { (x - threshold).max(0.0) } else { 0.0 })
            .collect(),
    }
}

/// Optimal solution for a nonnegative, nonincreasing, nonzero `a`.
pub fn solve_canonical(a: &[f64], tau: f64) -> Result<Vec<f64>> {
    Ok(solve_canonical_with_case(a, tau)?.0)
}

pub fn solve_canonical_with_case(a: &[f64], tau: f64) -> Result<(Vec<f64>, ProxCase)> {
    let case = classify(a, tau)?;
    Ok((apply_case(a, case), case))
}

/// `argmin_s ||s - a||_2 + τ ||s||_1` for an arbitrary finite `a`.
///
/// Unique whenever `τ != 1/sqrt(||a||_0)`; on that boundary `a` itself is
/// returned.
pub fn prox_sqrt_l1(a: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_tau(tau)?;
    if a.iter().any(|x| !x.is_finite()) {
        return Err(invalid("input vector must be finite"));
    }
    if a.iter().all(|&x| x == 0.0) {
        return Ok(vec![0.0; a.len()]);
    }
    let canon = canonicalize(a);
    let sol = solve_canonical(&canon.sorted_abs, tau)?;
    Ok(canon.restore(&sol))
}

/// S-step of the alternating scheme:
/// `argmin_S λ||S||_1 + μ||L + S - D||_F`, i.e. the vector prox applied to
/// `vec(D - L)` with `τ = λ/μ`.
#[allow(non_snake_case)]
pub fn update_S(l: &DenseMatrix, d: &DenseMatrix, lambda: f64, mu: f64) -> Result<DenseMatrix> {
    if !(lambda > 0.0 && lambda.is_finite()) || !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid("lambda and mu must be positive"));
    }
    let a = d.sub(l)?;
    let s = prox_sqrt_l1(a.as_col_major(), lambda / mu)?;
    Ok(DenseMatrix::from_col_major_unchecked(d.rows(), d.cols(), s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn canonical_form_of_mixed_signs() {
        let c = canonicalize(&[-2.0, 0.0, 1.0]);
        assert_eq!(c.sorted_abs, [2.0, 1.0, 0.0]);
        assert_eq!(c.signs, [-1, 0, 1]);
        assert_eq!(c.permutation, [0, 2, 1]);
        assert_eq!(c.restore(&c.sorted_abs), [-2.0, 0.0, 1.0]);
    }

    #[test]
    fn sorted_input_has_identity_permutation() {
        let c = canonicalize(&[3.0, 2.0, 2.0, 0.5]);
        assert_eq!(c.permutation, [0, 1, 2, 3]);
    }

    #[test]
    fn shrink_case_two_entries() {
        let (s, case) = solve_canonical_with_case(&[2.0, 1.0], 0.8).unwrap();
        assert!(close(&s, &[2.0 / 3.0, 0.0], 1e-15));
        match case {
            ProxCase::Shrink { k, threshold } => {
                assert_eq!(k, 1);
                assert!((threshold - 4.0 / 3.0).abs() < 1e-15);
            }
            other => panic!("unexpected case {other:?}"),
        }
    }

    #[test]
    fn zero_and_identity_cases() {
        assert_eq!(solve_canonical(&[4.0, 3.0], 1.2).unwrap(), [0.0, 0.0]);
        assert_eq!(classify(&[4.0, 3.0], 0.8).unwrap(), ProxCase::Zero);
        assert_eq!(solve_canonical(&[5.0, 5.0, 0.0], 0.5).unwrap(), [5.0, 5.0, 0.0]);
    }

    #[test]
    fn boundary_returns_input() {
        let a = [3.0, 1.0, 0.0, 0.0];
        let tau = 1.0 / 2f64.sqrt();
        assert_eq!(classify(&a, tau).unwrap(), ProxCase::Identity);
    }

    #[test]
    fn canonical_input_validation() {
        assert!(solve_canonical(&[1.0, 2.0], 0.5).is_err());
        assert!(solve_canonical(&[1.0, -1.0], 0.5).is_err());
        assert!(solve_canonical(&[0.0, 0.0], 0.5).is_err());
        assert!(solve_canonical(&[1.0], 0.0).is_err());
    }

    #[test]
    fn largest_index_guard() {
        assert_eq!(largest_index_below(0.5), 3);
        assert_eq!(largest_index_below(1.0 / 3f64.sqrt()), 2);
        assert_eq!(largest_index_below(0.3), 11);
        assert_eq!(largest_index_below(1.5), 0);
    }

    #[test]
    fn prox_handles_signs_and_zero() {
        assert_eq!(prox_sqrt_l1(&[0.0, 0.0], 0.3).unwrap(), [0.0, 0.0]);
        let s = prox_sqrt_l1(&[-2.0, 1.0], 0.8).unwrap();
        assert!(close(&s, &[-2.0 / 3.0, 0.0], 1e-15));
        assert_eq!(prox_sqrt_l1(&[0.3, -7.0, 2.0], 1.0001).unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn update_s_cases() {
        let d = DenseMatrix::from_diagonal(2, 2, &[2.0, 1.0]).unwrap();
        let s = update_S(&d, &d, 1.0, 1.0).unwrap();
        assert!(s.is_zero());
        let s = update_S(&DenseMatrix::zeros(2, 2), &d, 0.5, 1.0).unwrap();
        assert_eq!(s, d);
        let s = update_S(&DenseMatrix::zeros(2, 2), &d, 2.0, 1.5).unwrap();
        assert!(s.is_zero());
        assert!(update_S(&DenseMatrix::zeros(2, 3), &d, 1.0, 1.0).is_err());
    }
}
