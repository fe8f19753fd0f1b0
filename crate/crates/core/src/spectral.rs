//! Exact solver for `min_L ||L - A||_F + ρ ||L||_*`: shrink the singular
//! values of `A` with the vector closed form and rebuild.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::linalg::{outer_sum, svd_full, DenseMatrix};
use crate::prox::solve_canonical;

/// Shrunk singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkResult {
    /// Nonincreasing, componentwise at most the input.
    pub values: Vec<f64>,
    /// Number of strictly positive entries of `values`.
    pub active_rank: usize,
}

/// Singular-value shrinkage operator `d_ρ`.
pub fn d_rho(sigma: &[f64], rho: f64) -> Result<ShrinkResult> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid(alloc::format!("rho must be positive, got {rho}")));
    }
    if sigma.iter().all(|&s| s == 0.0) && sigma.iter().all(|s| s.is_finite()) {
        return Ok(ShrinkResult {
            values: vec![0.0; sigma.len()],
            active_rank: 0,
        });
    }
    let values = solve_canonical(sigma, rho)?;
    let active_rank = values.iter().filter(|&&v| v > 0.0).count();
    Ok(ShrinkResult {
        values,
        active_rank,
    })
}

/// Result of an L-update.
#[derive(Debug, Clone)]
pub struct LowRankUpdate {
    pub matrix: DenseMatrix,
    pub rank: usize,
    /// `||matrix||_*`, i.e. the sum of the shrunk singular values.
    pub nuclear_norm: f64,
}

impl LowRankUpdate {
    pub(crate) fn zero(rows: usize, cols: usize) -> Self {
        LowRankUpdate {
            matrix: DenseMatrix::zeros(rows, cols),
            rank: 0,
            nuclear_norm: 0.0,
        }
    }
}

/// Full-SVD L-update: `U Diag(d_ρ(σ)) V^T` for `A = U Diag(σ) V^T`.
#[allow(non_snake_case)]
pub fn update_L_full(a: &DenseMatrix, rho: f64) -> Result<LowRankUpdate> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid(alloc::format!("rho must be positive, got {rho}")));
    }
    if a.is_zero() {
        return Ok(LowRankUpdate::zero(a.rows(), a.cols()));
    }
    let svd = svd_full(a)?;
    let shrunk = d_rho(&svd.singular_values, rho)?;
    let r = shrunk.active_rank;
    Ok(LowRankUpdate {
        matrix: outer_sum(&svd.u, &shrunk.values[..r], &svd.v),
        rank: r,
        nuclear_norm: shrunk.values.iter().sum(),
    })
}

/// Maps the AltMin L-step `argmin_L ||L||_* + μ||L + S - D||_F` onto the
/// matrix subproblem: `A = D - S`, `ρ = 1/μ`. The only place this
/// reparameterization is written down.
pub(crate) fn l_step_parameters(d: &DenseMatrix, s: &DenseMatrix, mu: f64) -> Result<(DenseMatrix, f64)> {
    Ok((d.sub(s)?, 1.0 / mu))
}
