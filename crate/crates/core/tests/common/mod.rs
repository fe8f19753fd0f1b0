#![allow(dead_code)]

use srpcp_core::linalg::svd_full;
use srpcp_core::DenseMatrix;

/// `||x - a||_2 + tau ||x||_1`.
pub fn sqrt_l1_objective(x: &[f64], a: &[f64], tau: f64) -> f64 {
    let fit: f64 = x.iter().zip(a).map(|(x, a)| (x - a) * (x - a)).sum::<f64>().sqrt();
    fit + tau * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// Worst violation of the subgradient optimality conditions of
/// `min ||x - a||_2 + tau ||x||_1` at `x`.
///
/// With `r = a - x`: if `r = 0` there must be `v` in the l1 subdifferential
/// at `x` with `||tau v||_2 <= 1`; otherwise `r/||r||` must lie in
/// `tau * subdiff ||x||_1`.
pub fn sqrt_l1_certificate_gap(x: &[f64], a: &[f64], tau: f64) -> f64 {
    let r: Vec<f64> = a.iter().zip(x).map(|(a, x)| a - x).collect();
    let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rn == 0.0 {
        let nnz = x.iter().filter(|&&v| v != 0.0).count() as f64;
        return (tau * nnz.sqrt() - 1.0).max(0.0);
    }
    let mut gap: f64 = 0.0;
    for (xi, ri) in x.iter().zip(&r) {
        let g = ri / rn;
        if *xi != 0.0 {
            gap = gap.max((g - tau * xi.signum()).abs());
        } else {
            gap = gap.max(g.abs() - tau);
        }
    }
    gap
}

/// Deterministic Gaussian-ish matrix from a small LCG; independent of the
/// library's generator.
pub fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64)
    };
    DenseMatrix::from_fn(rows, cols, |_, _| {
        let s: f64 = (0..12).map(|_| next()).sum();
        s - 6.0
    })
    .unwrap()
}

/// `U Diag(sigma) V^T` with orthonormal factors taken from the SVD of a
/// random matrix.
pub fn with_spectrum(rows: usize, cols: usize, sigma: &[f64], seed: u64) -> DenseMatrix {
    let g = lcg_matrix(rows, cols, seed);
    let svd = svd_full(&g).unwrap();
    let p = rows.min(cols);
    let mut full = vec![0.0; p];
    full[..sigma.len()].copy_from_slice(sigma);
    svd.reconstruct_with(&full)
}

pub fn fro_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    srpcp_core::linalg::norm_fro(&a.sub(b).unwrap())
}
