//! Truncated SVD by Golub-Kahan-Lanczos bidiagonalization.
//!
//! Both Krylov bases are kept fully reorthogonalized (two Gram-Schmidt
//! passes per step). When the top triplets have not converged after `nb`
//! steps the basis is thick-restarted: the leading Ritz vectors are kept,
//! the last residual direction is appended, and the projected matrix
//! becomes `diag(θ)` plus one coupling column. That is the augmented
//! restart of Baglama and Reichel and is equivalent to an implicit restart
//! with exact shifts at the discarded Ritz values.

use alloc::vec;
use alloc::vec::Vec;

use super::matrix::{axpy, dot, norm2, DenseMatrix};
use super::norms::norm_fro;
use super::svd::{jacobi_svd, normalize_signs, svd_full};
use crate::error::{invalid, Result};

/// Top-`k` singular triplets.
#[derive(Debug, Clone)]
pub struct PartialSvd {
    /// `rows x k`, orthonormal columns.
    pub u: DenseMatrix,
    /// The `k` largest singular values, nonincreasing.
    pub singular_values: Vec<f64>,
    /// `cols x k`, orthonormal columns.
    pub v: DenseMatrix,
    /// False when the restart budget ran out before every requested
    /// triplet met the residual tolerance.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// A triplet is accepted once its residual norm is at most
    /// `tolerance * σ_1`.
    pub tolerance: f64,
    pub max_restarts: usize,
    /// Krylov basis size per cycle; defaults to `max(k + 20, 2k)` capped at
    /// `min(rows, cols)`.
    pub basis_size: Option<usize>,
    /// Use the dense SVD when `k > dense_fraction * min(rows, cols)`,
    /// where a Krylov method stops paying off. `None` never falls back.
    pub dense_fraction: Option<f64>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tolerance: 1e-10,
            max_restarts: 300,
            basis_size: None,
            dense_fraction: Some(0.1),
        }
    }
}

impl LanczosOptions {
    /// Whether `k` triplets out of `p` are cheaper from the dense SVD.
    pub fn prefers_dense(&self, k: usize, p: usize) -> bool {
        self.dense_fraction.is_some_and(|f| k as f64 > f * p as f64)
    }
}

/// Top-`k` singular triplets of `a` with the default options.
pub fn svd_partial(a: &DenseMatrix, k: usize) -> Result<PartialSvd> {
    svd_partial_with(a, k, &LanczosOptions::default())
}

pub fn svd_partial_with(a: &DenseMatrix, k: usize, opts: &LanczosOptions) -> Result<PartialSvd> {
    let (m, n) = a.shape();
    let p = m.min(n);
    if k == 0 || k > p {
        return Err(invalid(alloc::format!(
            "requested {k} singular triplets of a {m}x{n} matrix"
        )));
    }
    if !(opts.tolerance > 0.0) {
        return Err(invalid("Lanczos tolerance must be positive"));
    }
    // With k = p a restart could not keep k vectors and still extend the
    // basis, so the whole spectrum comes from the dense SVD.
    if k == p || opts.prefers_dense(k, p) {
        return truncate_full(a, k);
    }
    Lanczos::new(a, k, opts).run()
}

fn truncate_full(a: &DenseMatrix, k: usize) -> Result<PartialSvd> {
    let full = svd_full(a)?;
    let (m, n) = a.shape();
    let u = DenseMatrix::from_col_major_unchecked(m, k, full.u.as_col_major()[..m * k].to_vec());
    let v = DenseMatrix::from_col_major_unchecked(n, k, full.v.as_col_major()[..n * k].to_vec());
    Ok(PartialSvd {
        u,
        singular_values: full.singular_values[..k].to_vec(),
        v,
        converged: true,
    })
}

/// SplitMix64; only used to draw deterministic start and restart vectors.
struct SplitMix(u64);

impl SplitMix {
    fn next_unit(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn vector(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.next_unit()).collect()
    }
}

struct Lanczos<'a> {
    a: &'a DenseMatrix,
    k: usize,
    nb: usize,
    opts: LanczosOptions,
    rng: SplitMix,
    breakdown: f64,
}

/// Removes the components of `x` along `basis` (two classical passes).
/// Returns the accumulated coefficients.
fn reorthogonalize(x: &mut [f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (c, b) in coeffs.iter_mut().zip(basis) {
            let proj = dot(b, x);
            *c += proj;
            axpy(-proj, b, x);
        }
    }
    coeffs
}

impl<'a> Lanczos<'a> {
    fn new(a: &'a DenseMatrix, k: usize, opts: &LanczosOptions) -> Self {
        let p = a.rows().min(a.cols());
        let nb = opts
            .basis_size
            .unwrap_or((k + 20).max(2 * k))
            .clamp((k + 1).min(p), p);
        Lanczos {
            a,
            k,
            nb,
            opts: *opts,
            rng: SplitMix(0x5EED_1A2C_05D0_0001),
            breakdown: f64::EPSILON * 64.0 * norm_fro(a),
        }
    }

    /// Random unit vector orthogonal to `basis`.
    fn fresh_direction(&mut self, len: usize, basis: &[Vec<f64>]) -> Vec<f64> {
        loop {
            let mut x = self.rng.vector(len);
            reorthogonalize(&mut x, basis);
            let nrm = norm2(&x);
            if nrm > 1e-8 {
                x.iter_mut().for_each(|v| *v /= nrm);
                return x;
            }
        }
    }

    fn run(mut self) -> Result<PartialSvd> {
        let (m, n) = self.a.shape();
        let nb = self.nb;
        let k = self.k;

        let mut right: Vec<Vec<f64>> = Vec::with_capacity(nb);
        let mut left: Vec<Vec<f64>> = Vec::with_capacity(nb);
        let start = self.fresh_direction(n, &[]);
        right.push(start);
        // Projected matrix, row-major nb x nb: A P = Q B.
        let mut proj = vec![0.0; nb * nb];
        let mut kept = 0usize;

        for restart in 0..=self.opts.max_restarts {
            let mut residual = vec![0.0; n];
            let mut beta_last = 0.0;
            for j in kept..nb {
                let mut q = self.a.mul_vec(&right[j]);
                let coeffs = reorthogonalize(&mut q, &left);
                for (i, c) in coeffs.into_iter().enumerate() {
                    proj[i * nb + j] += c;
                }
                let mut alpha = norm2(&q);
                if alpha <= self.breakdown {
                    alpha = 0.0;
                    q = self.fresh_direction(m, &left);
                } else {
                    q.iter_mut().for_each(|v| *v /= alpha);
                }
                proj[j * nb + j] = alpha;
                left.push(q);

                let mut r = self.a.mul_vec_transposed(&left[j]);
                axpy(-alpha, &right[j], &mut r);
                reorthogonalize(&mut r, &right);
                let beta = norm2(&r);
                if j + 1 < nb {
                    let next = if beta <= self.breakdown {
                        self.fresh_direction(n, &right)
                    } else {
                        r.iter_mut().for_each(|v| *v /= beta);
                        r
                    };
                    right.push(next);
                } else {
                    residual = r;
                    beta_last = if beta <= self.breakdown { 0.0 } else { beta };
                }
            }

            let b = DenseMatrix::from_col_major_unchecked(nb, nb, transpose_square(&proj, nb));
            let small = jacobi_svd(&b)?;
            let theta = &small.singular_values;
            let scale = theta[0];
            let last_row = nb - 1;
            let converged = (0..k).all(|i| {
                beta_last * small.u.get(last_row, i).abs() <= self.opts.tolerance * scale
            });

            if converged || restart == self.opts.max_restarts {
                let mut u = combine(&left, &small.u, k, m);
                let mut v = combine(&right, &small.v, k, n);
                normalize_signs(&mut u, &mut v);
                return Ok(PartialSvd {
                    u,
                    singular_values: theta[..k].to_vec(),
                    v,
                    converged,
                });
            }

            let keep = (k + (nb - k) / 2).min(nb - 1).max(k);
            let new_left = combine(&left, &small.u, keep, m);
            let new_right = combine(&right, &small.v, keep, n);
            left = (0..keep).map(|i| new_left.column(i).to_vec()).collect();
            right = (0..keep).map(|i| new_right.column(i).to_vec()).collect();
            residual.iter_mut().for_each(|v| *v /= beta_last);
            // Guard against drift before extending the basis again.
            reorthogonalize(&mut residual, &right);
            let nrm = norm2(&residual);
            residual.iter_mut().for_each(|v| *v /= nrm);
            right.push(residual);
            proj.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..keep {
                proj[i * nb + i] = theta[i];
            }
            kept = keep;
        }
        unreachable!("the final restart always returns")
    }
}

fn transpose_square(row_major: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = row_major[i * n + j];
        }
    }
    out
}

/// `[basis_0 .. basis_{nb-1}] * coeffs[:, ..count]`.
fn combine(basis: &[Vec<f64>], coeffs: &DenseMatrix, count: usize, len: usize) -> DenseMatrix {
    let mut out = vec![0.0; len * count];
    for c in 0..count {
        let dst = &mut out[c * len..(c + 1) * len];
        for (j, b) in basis.iter().enumerate() {
            let w = coeffs.get(j, c);
            if w != 0.0 {
                axpy(w, b, dst);
            }
        }
    }
    DenseMatrix::from_col_major_unchecked(len, count, out)
}
