use super::matrix::DenseMatrix;
use super::svd::svd_full;
use crate::error::{invalid, Result};

/// Sum of singular values.
pub fn norm_nuclear(a: &DenseMatrix) -> Result<f64> {
    Ok(svd_full(a)?.singular_values.iter().sum())
}

/// Largest singular value.
pub fn norm_spectral(a: &DenseMatrix) -> Result<f64> {
    Ok(svd_full(a)?.singular_values[0])
}

pub fn norm_fro(a: &DenseMatrix) -> f64 {
    libm::sqrt(a.as_col_major().iter().map(|x| x * x).sum::<f64>())
}

/// Entrywise l1 norm.
pub fn norm_l1(a: &DenseMatrix) -> f64 {
    a.as_col_major().iter().map(|x| x.abs()).sum()
}

/// Entrywise max-abs norm.
pub fn norm_linf(a: &DenseMatrix) -> f64 {
    a.as_col_major().iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// The stacked object `[L; S]` on which the low-rank/sparse norm pair acts.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedPair {
    l: DenseMatrix,
    s: DenseMatrix,
}

impl StackedPair {
    pub fn new(l: DenseMatrix, s: DenseMatrix) -> Result<Self> {
        l.ensure_same_shape(&s)?;
        Ok(StackedPair { l, s })
    }

    pub fn low_rank(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn sparse(&self) -> &DenseMatrix {
        &self.s
    }

    /// `<L_B, L_C> + <S_B, S_C>`.
    pub fn inner(&self, other: &StackedPair) -> Result<f64> {
        Ok(self.l.dot(&other.l)? + self.s.dot(&other.s)?)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(alloc::format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// `||L||_* + λ ||S||_1`.
pub fn norm_diamond(b: &StackedPair, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(norm_nuclear(&b.l)? + lambda * norm_l1(&b.s))
}

/// Dual of [`norm_diamond`]: `max(||L||, ||S||_∞ / λ)`.
pub fn norm_diamond_dual(b: &StackedPair, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(norm_spectral(&b.l)?.max(norm_linf(&b.s) / lambda))
}
