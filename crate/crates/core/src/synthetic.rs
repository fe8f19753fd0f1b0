//! Random test instances `D = L0 + S0 + Z0` and recovery errors.
//!
//! Randomness comes from ChaCha20 seeded with `seed_from_u64`, and normal
//! deviates from the Ziggurat sampler of `rand_distr`, so an instance is
//! a pure function of its parameters on every platform. Draw order:
//! `X` then `Y` (column-major, entries `N(0, 1/n)`), then the support of
//! `S0` by a partial Fisher-Yates shuffle of the `n²` column-major cell
//! indices, one sign per support cell in shuffle order, then `Z0`
//! (column-major, entries `N(0, σ²)`; no draws when `σ = 0`).

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::linalg::{norm_fro, DenseMatrix};

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub l0: DenseMatrix,
    pub s0: DenseMatrix,
    pub z0: DenseMatrix,
    /// `(L0 + S0) + Z0`, evaluated entrywise in that order.
    pub d: DenseMatrix,
    pub n: usize,
    pub r: usize,
    pub s: usize,
    pub sigma: f64,
    pub seed: u64,
}

/// `n x n` instance with `rank(L0) <= r`, `||S0||_0 = s` with `±1`
/// entries, and Gaussian noise of standard deviation `sigma`.
pub fn gen_synthetic(n: usize, r: usize, s: usize, sigma: f64, seed: u64) -> Result<SyntheticInstance> {
    if n == 0 || r == 0 || r > n {
        return Err(invalid(alloc::format!("need 0 < r <= n, got n = {n}, r = {r}")));
    }
    let cells = n.checked_mul(n).ok_or_else(|| invalid("n too large"))?;
    if s > cells {
        return Err(invalid(alloc::format!("s = {s} exceeds n² = {cells}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma must be finite and nonnegative"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = 1.0 / libm::sqrt(n as f64);
    let normal = |rng: &mut ChaCha20Rng| -> f64 { rng.sample::<f64, _>(StandardNormal) };

    let x: Vec<f64> = (0..n * r).map(|_| scale * normal(&mut rng)).collect();
    let y: Vec<f64> = (0..n * r).map(|_| scale * normal(&mut rng)).collect();
    let x = DenseMatrix::from_col_major(n, r, x)?;
    let y = DenseMatrix::from_col_major(n, r, y)?;
    let l0 = x.matmul(&y.transpose())?;

    let mut s0 = vec![0.0; cells];
    let mut idx: Vec<usize> = (0..cells).collect();
    let (support, _) = idx.partial_shuffle(&mut rng, s);
    for &cell in support.iter() {
        s0[cell] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    let s0 = DenseMatrix::from_col_major(n, n, s0)?;

    let z0 = if sigma == 0.0 {
        DenseMatrix::zeros(n, n)
    } else {
        let z: Vec<f64> = (0..cells).map(|_| sigma * normal(&mut rng)).collect();
        DenseMatrix::from_col_major(n, n, z)?
    };

    let d: Vec<f64> = l0
        .as_col_major()
        .iter()
        .zip(s0.as_col_major())
        .zip(z0.as_col_major())
        .map(|((a, b), c)| (a + b) + c)
        .collect();
    let d = DenseMatrix::from_col_major(n, n, d)?;

    Ok(SyntheticInstance {
        l0,
        s0,
        z0,
        d,
        n,
        r,
        s,
        sigma,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryErrors {
    /// `||L̂ - L0||_F / (1 + ||L0||_F)`.
    pub eta_l: f64,
    /// `||Ŝ - S0||_F / (1 + ||S0||_F)`.
    pub eta_s: f64,
}

pub fn recovery_errors(l_hat: &DenseMatrix, s_hat: &DenseMatrix, instance: &SyntheticInstance) -> Result<RecoveryErrors> {
    let eta_l = norm_fro(&l_hat.sub(&instance.l0)?) / (1.0 + norm_fro(&instance.l0));
    let eta_s = norm_fro(&s_hat.sub(&instance.s0)?) / (1.0 + norm_fro(&instance.s0));
    Ok(RecoveryErrors { eta_l, eta_s })
}
