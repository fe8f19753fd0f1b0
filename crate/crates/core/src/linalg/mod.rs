//! Dense matrices, full and truncated SVD, and the norms used by the model.

mod lanczos;
mod matrix;
mod norms;
mod svd;

pub use lanczos::{svd_partial, svd_partial_with, LanczosOptions, PartialSvd};
pub use matrix::DenseMatrix;
pub use norms::{
    norm_diamond, norm_diamond_dual, norm_fro, norm_l1, norm_linf, norm_nuclear, norm_spectral,
    StackedPair,
};
pub use svd::{svd_full, SvdResult};

pub(crate) use svd::outer_sum;
