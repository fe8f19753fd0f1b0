#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod bm;
pub mod linalg;
pub mod prox;
pub mod solver;
pub mod spectral;
pub mod synthetic;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
