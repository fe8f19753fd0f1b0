use alloc::vec;
use alloc::vec::Vec;

use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};

/// Thin singular value decomposition `A = U Diag(σ) V^T`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows x p`, orthonormal columns.
    pub u: DenseMatrix,
    /// Nonincreasing, nonnegative, length `p`.
    pub singular_values: Vec<f64>,
    /// `cols x p`, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn rank_count(&self) -> usize {
        self.singular_values.len()
    }

    /// `U[:, ..k] Diag(values) V[:, ..k]^T` for `k = values.len()`.
    pub fn reconstruct_with(&self, values: &[f64]) -> DenseMatrix {
        outer_sum(&self.u, values, &self.v)
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(&self.singular_values)
    }
}

/// `Σ_i values[i] u_i v_i^T`, skipping zero weights.
pub(crate) fn outer_sum(u: &DenseMatrix, values: &[f64], v: &DenseMatrix) -> DenseMatrix {
    let (m, n) = (u.rows(), v.rows());
    let mut out = DenseMatrix::zeros(m, n);
    for (i, &d) in values.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let ui = u.column(i);
        let vi = v.column(i);
        let data = out.as_col_major_mut();
        for (j, &vij) in vi.iter().enumerate() {
            let w = d * vij;
            if w == 0.0 {
                continue;
            }
            for (dst, &uv) in data[j * m..(j + 1) * m].iter_mut().zip(ui) {
                *dst += w * uv;
            }
        }
    }
    out
}

/// Flips singular-vector pairs so the largest-magnitude entry of each left
/// vector is positive. Makes factors reproducible across SVD routes.
pub(crate) fn normalize_signs(u: &mut DenseMatrix, v: &mut DenseMatrix) {
    for c in 0..u.cols() {
        let col = u.column(c);
        let mut best = 0usize;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            u.column_mut(c).iter_mut().for_each(|x| *x = -*x);
            v.column_mut(c).iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Full thin SVD.
///
/// Deterministic for a fixed input (sequential factorization, fixed sign
/// convention).
pub fn svd_full(a: &DenseMatrix) -> Result<SvdResult> {
    let (m, n) = a.shape();
    let p = m.min(n);
    let mat = faer::Mat::<f64>::from_fn(m, n, |i, j| a.as_col_major()[j * m + i]);
    let svd = mat.thin_svd().map_err(|_| Error::SvdNoConvergence)?;
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());

    let mut sigma: Vec<f64> = (0..p).map(|i| fs[i]).collect();
    if sigma.iter().any(|s| !s.is_finite()) {
        return Err(Error::SvdNoConvergence);
    }
    let mut u = DenseMatrix::zeros(m, p);
    let mut v = DenseMatrix::zeros(n, p);
    for c in 0..p {
        for (i, x) in u.column_mut(c).iter_mut().enumerate() {
            *x = fu[(i, c)];
        }
        for (i, x) in v.column_mut(c).iter_mut().enumerate() {
            *x = fv[(i, c)];
        }
    }
    if u.as_col_major().iter().chain(v.as_col_major()).any(|x| !x.is_finite()) {
        return Err(Error::SvdNoConvergence);
    }
    // The backend already sorts; clamp tiny negative roundoff.
    for s in &mut sigma {
        *s = s.max(0.0);
    }
    debug_assert!(sigma.windows(2).all(|w| w[0] >= w[1]));
    normalize_signs(&mut u, &mut v);
    Ok(SvdResult {
        u,
        singular_values: sigma,
        v,
    })
}

/// One-sided (Hestenes) Jacobi SVD for small dense matrices with
/// `rows >= cols`. Used on the projected matrices inside the truncated
/// solver, where high relative accuracy of small singular values matters
/// more than speed.
///
/// Returns `(U, σ, V)` sorted nonincreasing; `U` is completed to an
/// orthonormal set when `A` is rank deficient.
pub(crate) fn jacobi_svd(a: &DenseMatrix) -> Result<SvdResult> {
    let (m, n) = a.shape();
    if m < n {
        let t = jacobi_svd(&a.transpose())?;
        return Ok(SvdResult {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    let mut w = a.as_col_major().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    const MAX_SWEEPS: usize = 80;
    let eps = f64::EPSILON;
    let rotation_tol = eps * m as f64;
    // Columns below this squared norm are numerically zero; rotating them
    // only shuffles roundoff.
    let negligible = {
        let fro2: f64 = w.iter().map(|x| x * x).sum();
        fro2 * eps * eps
    };
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (cp, cq) = (&w[p * m..(p + 1) * m], &w[q * m..(q + 1) * m]);
                let alpha = dot(cp, cp);
                let beta = dot(cq, cq);
                let gamma = dot(cp, cq);
                if alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= rotation_tol * libm::sqrt(alpha * beta)
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_columns(&mut w, m, p, q, c, s);
                rotate_columns(&mut v, n, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence);
    }

    let norms: Vec<f64> = (0..n)
        .map(|j| libm::sqrt(dot(&w[j * m..(j + 1) * m], &w[j * m..(j + 1) * m])))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));

    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let mut u = DenseMatrix::zeros(m, n);
    let mut vv = DenseMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        vv.column_mut(dst).copy_from_slice(&v[src * n..(src + 1) * n]);
        if s > scale * eps * (m as f64) && s > 0.0 {
            for (x, &y) in u.column_mut(dst).iter_mut().zip(&w[src * m..(src + 1) * m]) {
                *x = y / s;
            }
        } else {
            deficient.push(dst);
        }
    }
    complete_orthonormal(&mut u, &deficient);
    normalize_signs(&mut u, &mut vv);
    Ok(SvdResult {
        u,
        singular_values: sigma,
        v: vv,
    })
}

fn rotate_columns(data: &mut [f64], m: usize, p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = data.split_at_mut(q * m);
    let cp = &mut lo[p * m..(p + 1) * m];
    let cq = &mut hi[..m];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to every
/// other column (Gram-Schmidt over the canonical basis).
fn complete_orthonormal(u: &mut DenseMatrix, columns: &[usize]) {
    let m = u.rows();
    let mut filled: Vec<usize> = (0..u.cols()).filter(|c| !columns.contains(c)).collect();
    let mut candidate = 0usize;
    for &c in columns {
        loop {
            assert!(candidate < m, "cannot complete orthonormal basis");
            let mut x = vec![0.0; m];
            x[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for &f in &filled {
                    let proj = dot(u.column(f), &x);
                    for (xi, &ui) in x.iter_mut().zip(u.column(f)) {
                        *xi -= proj * ui;
                    }
                }
            }
            let nrm = libm::sqrt(dot(&x, &x));
            if nrm > 0.5 {
                for (dst, xi) in u.column_mut(c).iter_mut().zip(&x) {
                    *dst = xi / nrm;
                }
                filled.push(c);
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut state = seed;
        DenseMatrix::from_fn(m, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .unwrap()
    }

    fn orthonormality_defect(q: &DenseMatrix) -> f64 {
        let g = q.transpose().matmul(q).unwrap();
        let eye = DenseMatrix::identity(q.cols());
        super::super::norms::norm_fro(&g.sub(&eye).unwrap())
    }

    fn check(a: &DenseMatrix, svd: &SvdResult) {
        let p = svd.singular_values.len() as f64;
        assert!(orthonormality_defect(&svd.u) <= 1e-10 * p);
        assert!(orthonormality_defect(&svd.v) <= 1e-10 * p);
        assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(svd.singular_values.iter().all(|&s| s >= 0.0));
        let err = super::super::norms::norm_fro(&svd.reconstruct().sub(a).unwrap());
        let scale = super::super::norms::norm_fro(a).max(1.0);
        assert!(err <= 1e-8 * scale, "reconstruction error {err}");
    }

    #[test]
    fn diagonal_has_identity_factors() {
        let a = DenseMatrix::from_diagonal(2, 2, &[3.0, 1.0]).unwrap();
        for svd in [svd_full(&a).unwrap(), jacobi_svd(&a).unwrap()] {
            assert_eq!(svd.singular_values.len(), 2);
            assert!((svd.singular_values[0] - 3.0).abs() < 1e-14);
            assert!((svd.singular_values[1] - 1.0).abs() < 1e-14);
            let eye = DenseMatrix::identity(2);
            assert!(super::super::norms::norm_fro(&svd.u.sub(&eye).unwrap()) < 1e-14);
            assert!(super::super::norms::norm_fro(&svd.v.sub(&eye).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn zero_matrix() {
        let a = DenseMatrix::zeros(3, 2);
        for svd in [svd_full(&a).unwrap(), jacobi_svd(&a).unwrap()] {
            assert_eq!(svd.singular_values, [0.0, 0.0]);
            check(&a, &svd);
        }
    }

    #[test]
    fn random_reconstruction_both_routes() {
        for (m, n, seed) in [(20, 15, 1), (15, 20, 2), (7, 7, 3), (40, 3, 4)] {
            let a = pseudo_random(m, n, seed);
            let full = svd_full(&a).unwrap();
            let jac = jacobi_svd(&a).unwrap();
            check(&a, &full);
            check(&a, &jac);
            for (x, y) in full.singular_values.iter().zip(&jac.singular_values) {
                assert!((x - y).abs() <= 1e-12 * full.singular_values[0]);
            }
        }
    }

    #[test]
    fn rank_deficient_jacobi_completes_basis() {
        let x = pseudo_random(12, 2, 9);
        let a = x.matmul(&x.transpose()).unwrap();
        let svd = jacobi_svd(&a).unwrap();
        check(&a, &svd);
        assert!(svd.singular_values[2] < 1e-12);
    }

    #[test]
    fn deterministic() {
        let a = pseudo_random(30, 25, 11);
        let s1 = svd_full(&a).unwrap();
        let s2 = svd_full(&a).unwrap();
        assert_eq!(s1.u, s2.u);
        assert_eq!(s1.singular_values, s2.singular_values);
    }
}
