//! Burer-Monteiro accelerated L-update.
//!
//! With a rank guess `k`, the factorized problem
//! `min ||U V^T - A||_F + ρ/2 (||U||_F² + ||V||_F²)` only needs the top `k`
//! singular triplets of `A` and the energy `c` of the rest of the spectrum.
//! Its closed-form solution comes from [`solve_uv`], lifted back to factors
//! by [`lift_to_factors`]. [`rank_certificate`] tells whether the guess was
//! large enough for the factorized solution to also solve the nuclear-norm
//! problem; [`acc_update_L`] grows the guess until it is.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm_fro, outer_sum, svd_full, svd_partial_with, DenseMatrix, LanczosOptions};
use crate::prox::tail_sums_of_squares;
use crate::spectral::LowRankUpdate;

/// Relative tail energy below which `c` is recomputed from `A - U Σ V^T`.
const TAIL_RECHECK: f64 = 1e-6;

/// Top-`k` spectrum `w`, tail energy `c` and penalty `ρ` of one
/// factorized L-update.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedProblem {
    pub w: Vec<f64>,
    pub c: f64,
    pub rho: f64,
}

impl ReducedProblem {
    pub fn new(w: Vec<f64>, c: f64, rho: f64) -> Result<Self> {
        check_uv_input(&w, c, rho)?;
        let rp = ReducedProblem { w, c, rho };
        debug_assert!(rp.branch_bounds().map_or(true, |(lo, hi)| lo <= hi * (1.0 + 1e-12)));
        Ok(rp)
    }

    /// Splits a sorted spectrum of a matrix with squared Frobenius norm
    /// `frobenius_sq` at `k`: `w = a[..k]` and
    /// `c = sqrt(max(0, ||A||_F² - ||w||²))`.
    pub fn from_spectrum(spectrum: &[f64], frobenius_sq: f64, k: usize, rho: f64) -> Result<Self> {
        if k == 0 || k > spectrum.len() {
            return Err(invalid("rank guess out of range"));
        }
        let w = spectrum[..k].to_vec();
        let head: f64 = w.iter().rev().map(|x| x * x).sum();
        let c = libm::sqrt((frobenius_sq - head).max(0.0));
        Self::new(w, c, rho)
    }

    /// `(w_ℓ / sqrt(ℓ w_ℓ² + c²), ||w||_∞ / sqrt(||w||² + c²))`, the two
    /// breakpoints between the three closed-form branches. `None` when `w = 0`.
    pub fn branch_bounds(&self) -> Option<(f64, f64)> {
        let ell = self.w.iter().take_while(|&&x| x > 0.0).count();
        if ell == 0 {
            return None;
        }
        let wl = self.w[ell - 1];
        let norm_sq: f64 = self.w[..ell].iter().rev().map(|x| x * x).sum::<f64>() + self.c * self.c;
        let lower = wl / libm::sqrt(ell as f64 * wl * wl + self.c * self.c);
        let upper = self.w[0] / libm::sqrt(norm_sq);
        Some((lower, upper))
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        solve_uv(&self.w, self.c, self.rho)
    }
}

fn check_uv_input(w: &[f64], c: f64, rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid(alloc::format!("rho must be positive, got {rho}")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(invalid("tail energy c must be finite and nonnegative"));
    }
    if w.is_empty() || w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(invalid("w must be nonempty, finite and nonnegative"));
    }
    if w.windows(2).any(|p| p[0] < p[1]) {
        return Err(invalid("w must be sorted nonincreasing"));
    }
    Ok(())
}

/// Closed-form minimizer of
/// `sqrt(||s - w||² + c²) + ρ <s, 1>` over `s >= 0`.
///
/// Trailing zeros of `w` stay zero; the branch formulas are applied to the
/// positive prefix of length `ℓ = ||w||_0`.
pub fn solve_uv(w: &[f64], c: f64, rho: f64) -> Result<Vec<f64>> {
    check_uv_input(w, c, rho)?;
    let ell = w.iter().take_while(|&&x| x > 0.0).count();
    if ell == 0 {
        return Err(invalid("w must be nonzero"));
    }
    let k = w.len();
    let head = &w[..ell];
    let c2 = c * c;
    let tails = tail_sums_of_squares(head, c2, ell - 1);
    let upper = head[0] / libm::sqrt(tails[0]);
    if upper <= rho {
        return Ok(vec![0.0; k]);
    }
    let wl = head[ell - 1];
    let lower = wl / libm::sqrt(ell as f64 * wl * wl + c2);
    let mut out = vec![0.0; k];
    if rho <= lower {
        let shift = if c2 == 0.0 {
            0.0
        } else {
            rho * libm::sqrt(c2 / (1.0 - ell as f64 * rho * rho))
        };
        for (o, &x) in out.iter_mut().zip(head) {
            *o = (x - shift).max(0.0);
        }
        return Ok(out);
    }
    let threshold = middle_threshold(head, &tails, rho);
    for (o, &x) in out.iter_mut().zip(head) {
        *o = (x - threshold).max(0.0);
    }
    Ok(out)
}

/// Threshold `t_i` of the middle branch: the first `i` in `1..ℓ` with
/// `w_{i+1} <= t_i`.
fn middle_threshold(head: &[f64], tails: &[f64], rho: f64) -> f64 {
    let ell = head.len();
    let inv = 1.0 / (rho * rho);
    for i in 1..ell {
        let denom = inv - i as f64;
        if denom <= 0.0 {
            break;
        }
        let t = libm::sqrt(tails[i] / denom);
        if head[i] <= t {
            debug_assert!(t < head[i - 1] * (1.0 + 1e-12));
            return t;
        }
    }
    // Only reachable through roundoff at a branch boundary; the lower
    // branch formula is the continuous extension there.
    let c2 = tails[ell - 1] - head[ell - 1] * head[ell - 1];
    rho * libm::sqrt(c2.max(0.0) / (1.0 - ell as f64 * rho * rho).max(f64::MIN_POSITIVE))
}

/// Check that a rank guess is large enough.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankCertificate {
    /// `||w||_0`.
    pub ell: usize,
    /// The next singular value after the `ℓ` positive ones.
    pub sigma_next: f64,
    /// `σ_{ℓ+1} / sqrt(ℓ σ_{ℓ+1}² + c²)`.
    pub threshold: f64,
    /// `ρ >= threshold`.
    pub ok: bool,
}

pub fn rank_certificate(ell: usize, sigma_next: f64, c: f64, rho: f64) -> RankCertificate {
    let threshold = if sigma_next == 0.0 {
        0.0
    } else {
        sigma_next / libm::sqrt(ell as f64 * sigma_next * sigma_next + c * c)
    };
    RankCertificate {
        ell,
        sigma_next,
        threshold,
        ok: rho >= threshold,
    }
}

/// `U = H Diag(sqrt(d))`, `V = W Diag(sqrt(d))`.
pub fn lift_to_factors(h: &DenseMatrix, w: &DenseMatrix, d: &[f64]) -> Result<(DenseMatrix, DenseMatrix)> {
    if h.cols() != d.len() || w.cols() != d.len() {
        return Err(Error::ShapeMismatch {
            expected: (h.rows(), d.len()),
            found: h.shape(),
        });
    }
    if d.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(invalid("d must be finite and nonnegative"));
    }
    let scale = |m: &DenseMatrix| {
        let mut out = m.clone();
        for (j, &dj) in d.iter().enumerate() {
            let s = libm::sqrt(dj);
            out.column_mut(j).iter_mut().for_each(|x| *x *= s);
        }
        out
    };
    Ok((scale(h), scale(w)))
}

/// Outcome of [`acc_update_L`].
#[derive(Debug, Clone)]
pub struct AccUpdate {
    pub update: LowRankUpdate,
    /// Rank guess at which the certificate passed.
    pub rank_guess: usize,
    /// Number of rank guesses tried (truncated SVDs computed).
    pub trials: usize,
    /// Trials where the truncated SVD did not converge and the dense SVD
    /// was used instead.
    pub dense_fallbacks: usize,
    pub certificate: RankCertificate,
}

/// Accelerated L-update. Starting from the guess `k`, each trial raises it,
/// computes the top `k + 1` triplets of `a`, solves the reduced problem and
/// stops once the rank certificate holds. The first raise is `delta_k` and
/// each failed trial doubles it.
///
/// Agrees with [`crate::spectral::update_L_full`] on the returned matrix.
#[allow(non_snake_case)]
pub fn acc_update_L(a: &DenseMatrix, rho: f64, k: usize, delta_k: usize) -> Result<AccUpdate> {
    acc_update_L_with(a, rho, k, delta_k, &LanczosOptions::default())
}

/// [`acc_update_L`] with explicit truncated-SVD options. Once the dense
/// SVD is preferred for `k + 1` triplets, the whole spectrum is used
/// (`k = min(rows, cols)`), where the certificate holds trivially.
#[allow(non_snake_case)]
pub fn acc_update_L_with(
    a: &DenseMatrix,
    rho: f64,
    k: usize,
    delta_k: usize,
    opts: &LanczosOptions,
) -> Result<AccUpdate> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid(alloc::format!("rho must be positive, got {rho}")));
    }
    if delta_k == 0 {
        return Err(invalid("rank increment must be positive"));
    }
    let (m, n) = a.shape();
    let p = m.min(n);
    if a.is_zero() {
        return Ok(AccUpdate {
            update: LowRankUpdate::zero(m, n),
            rank_guess: k.min(p),
            trials: 0,
            dense_fallbacks: 0,
            certificate: rank_certificate(1, 0.0, 0.0, rho),
        });
    }
    let fro = norm_fro(a);
    let frobenius_sq = fro * fro;
    let mut k = k;
    let mut step = delta_k;
    let mut trials = 0;
    let mut dense_fallbacks = 0;
    loop {
        k = k.saturating_add(step).min(p);
        step = step.saturating_mul(2);
        trials += 1;
        let (hu, sigma, wv) = if k == p || opts.prefers_dense(k + 1, p) {
            k = p;
            let full = svd_full(a)?;
            (full.u, full.singular_values, full.v)
        } else {
            let ps = svd_partial_with(a, k + 1, opts)?;
            if ps.converged {
                (ps.u, ps.singular_values, ps.v)
            } else {
                dense_fallbacks += 1;
                k = p;
                let full = svd_full(a)?;
                (full.u, full.singular_values, full.v)
            }
        };
        // With the whole spectrum the tail is empty; `||A||_F² - ||σ||²` would
        // only contribute cancellation noise of order sqrt(eps)·||A||_F.
        let reduced = if k == p {
            ReducedProblem::new(sigma[..p].to_vec(), 0.0, rho)?
        } else {
            let mut reduced = ReducedProblem::from_spectrum(&sigma, frobenius_sq, k, rho)?;
            // A tail far below the head is lost to cancellation; measure it
            // from the explicit remainder instead.
            if reduced.c * reduced.c < TAIL_RECHECK * frobenius_sq {
                let head = outer_sum(&hu, &sigma[..k], &wv);
                reduced.c = norm_fro(&a.sub(&head)?);
            }
            reduced
        };
        let d = reduced.solve()?;
        let ell = reduced.w.iter().take_while(|&&x| x > 0.0).count();
        let sigma_next = if ell < k {
            0.0
        } else if k < sigma.len() {
            sigma[k]
        } else {
            0.0
        };
        let certificate = rank_certificate(ell, sigma_next, reduced.c, rho);
        if !certificate.ok && k < p {
            continue;
        }
        let rank = d.iter().filter(|&&x| x > 0.0).count();
        let matrix = if rank == 0 {
            DenseMatrix::zeros(m, n)
        } else {
            let h = leading_columns(&hu, rank);
            let w = leading_columns(&wv, rank);
            let (u, v) = lift_to_factors(&h, &w, &d[..rank])?;
            outer_sum(&u, &vec![1.0; rank], &v)
        };
        return Ok(AccUpdate {
            update: LowRankUpdate {
                matrix,
                rank,
                nuclear_norm: d.iter().sum(),
            },
            rank_guess: k,
            trials,
            dense_fallbacks,
            certificate,
        });
    }
}

fn leading_columns(m: &DenseMatrix, count: usize) -> DenseMatrix {
    DenseMatrix::from_col_major_unchecked(m.rows(), count, m.as_col_major()[..m.rows() * count].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm_nuclear, DenseMatrix};
    use crate::spectral::update_L_full;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn uv_branches() {
        let mid = solve_uv(&[2.0, 1.0], 1.0, 0.7).unwrap();
        let t1 = (2.0 / (1.0 / 0.49 - 1.0f64)).sqrt();
        assert!(close(&mid, &[2.0 - t1, 0.0], 1e-14));
        assert!((mid[0] - 0.613793).abs() < 1e-6);

        assert_eq!(solve_uv(&[2.0, 1.0], 1.0, 0.9).unwrap(), [0.0, 0.0]);

        let low = solve_uv(&[2.0, 1.0], 1.0, 0.5).unwrap();
        let shift = 2f64.sqrt() / 2.0;
        assert!(close(&low, &[2.0 - shift, 1.0 - shift], 1e-14));
    }

    #[test]
    fn uv_reduces_to_vector_prox_without_tail() {
        for (w, rho) in [(vec![2.0, 1.0], 0.8), (vec![3.0, 2.0, 2.0, 0.5], 0.6), (vec![1.0, 1.0], 0.3)] {
            let a = solve_uv(&w, 0.0, rho).unwrap();
            let b = crate::prox::solve_canonical(&w, rho).unwrap();
            assert!(close(&a, &b, 1e-14), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn uv_trailing_zeros_stay_zero() {
        let s = solve_uv(&[2.0, 1.0, 0.0, 0.0], 1.0, 0.5).unwrap();
        assert_eq!(&s[2..], [0.0, 0.0]);
        assert!(solve_uv(&[1.0, 2.0], 0.0, 0.5).is_err());
        assert!(solve_uv(&[0.0], 0.0, 0.5).is_err());
    }

    #[test]
    fn certificate_values() {
        let c = 1.25f64.sqrt();
        let cert = rank_certificate(2, 1.0, c, 0.6);
        assert!((cert.threshold - 1.0 / 3.25f64.sqrt()).abs() < 1e-15);
        assert!(cert.ok);
        assert!(!rank_certificate(2, 1.0, c, 0.4).ok);
        assert!(rank_certificate(3, 0.0, 0.0, 1e-9).ok);
    }

    #[test]
    fn lift_examples() {
        let z = DenseMatrix::zeros(3, 2);
        let (u, v) = lift_to_factors(&z, &z, &[0.0, 0.0]).unwrap();
        assert!(u.is_zero() && v.is_zero());

        let eye = DenseMatrix::identity(2);
        let (u, v) = lift_to_factors(&eye, &eye, &[4.0, 1.0]).unwrap();
        let prod = u.matmul(&v.transpose()).unwrap();
        assert_eq!(prod, DenseMatrix::from_diagonal(2, 2, &[4.0, 1.0]).unwrap());
        let half = 0.5 * (norm_fro(&u).powi(2) + norm_fro(&v).powi(2));
        assert!((half - 5.0).abs() < 1e-14);
        assert!((norm_nuclear(&prod).unwrap() - 5.0).abs() < 1e-12);
        assert!(lift_to_factors(&eye, &eye, &[1.0]).is_err());
    }

    #[test]
    fn acc_matches_full_on_diagonal() {
        let a = DenseMatrix::from_diagonal(2, 2, &[3.0, 1.0]).unwrap();
        let acc = acc_update_L(&a, 0.8, 0, 1).unwrap();
        let full = update_L_full(&a, 0.8).unwrap();
        assert_eq!(acc.update.rank, 1);
        assert!(norm_fro(&acc.update.matrix.sub(&full.matrix).unwrap()) < 1e-14);
        assert!(acc.certificate.ok);
    }

    #[test]
    fn acc_zero_matrix() {
        let acc = acc_update_L(&DenseMatrix::zeros(4, 3), 0.5, 2, 1).unwrap();
        assert!(acc.update.matrix.is_zero());
        assert_eq!(acc.trials, 0);
    }
}
