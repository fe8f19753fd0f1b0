//! Background/foreground separation of a grayscale frame stack.
//!
//! The stacked frames `D` split into a low-rank background `L̂`, a sparse
//! foreground `Ŝ` and the residual `Ẑ = D - (L̂ + Ŝ)`.

use std::path::{Path, PathBuf};

use srpcp_core::solver::{solve_with, Mode, Problem, SolveResult, SolverConfig};
use srpcp_core::DenseMatrix;

use crate::error::IoResult;
use crate::frames::{contrast_stretch, stack_to_matrix, unstack_column, write_pgm, FrameStack};
use crate::Stopwatch;

/// Tolerance used for video unless overridden.
pub const VIDEO_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct VideoOptions {
    pub config: SolverConfig,
    /// Defaults to `1/sqrt(n₁)` when `None`.
    pub lambda: Option<f64>,
    /// Defaults to `sqrt(n₂/2)` when `None`.
    pub mu: Option<f64>,
    pub verbose: bool,
}

impl Default for VideoOptions {
    fn default() -> Self {
        VideoOptions {
            config: SolverConfig {
                tolerance: VIDEO_TOLERANCE,
                mode: Mode::Accelerated,
                ..SolverConfig::default()
            },
            lambda: None,
            mu: None,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VideoDecomposition {
    pub height: usize,
    pub width: usize,
    pub data: DenseMatrix,
    pub result: SolveResult,
    /// `D - (L̂ + Ŝ)`.
    pub noise: DenseMatrix,
}

impl VideoDecomposition {
    /// `(L̂ + Ŝ) + Ẑ`, evaluated in that order.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.result
            .l_hat
            .add(&self.result.s_hat)
            .and_then(|ls| ls.add(&self.noise))
            .expect("components share the data shape")
    }
}

pub fn decompose(stack: &FrameStack, opts: &VideoOptions) -> IoResult<VideoDecomposition> {
    let data = stack_to_matrix(stack)?;
    let (n1, n2) = data.shape();
    let (lambda0, mu0) = srpcp_core::solver::default_parameters(n1, n2);
    let problem = Problem::new(data.clone(), opts.lambda.unwrap_or(lambda0), opts.mu.unwrap_or(mu0))?;
    let mut watch = Stopwatch::start(opts.verbose);
    let result = solve_with(&problem, &opts.config, &mut watch)?;
    let noise = data.sub(&result.l_hat.add(&result.s_hat)?)?;
    Ok(VideoDecomposition {
        height: stack.height,
        width: stack.width,
        data,
        result,
        noise,
    })
}

/// Writes `background_NNNN.pgm`, `foreground_NNNN.pgm` and
/// `noise_NNNN.pgm` for every frame into `out_dir`.
pub fn write_outputs(dec: &VideoDecomposition, out_dir: &Path, stretch: bool) -> IoResult<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| crate::IoError::at(out_dir, e))?;
    let parts = [
        ("background", &dec.result.l_hat),
        ("foreground", &dec.result.s_hat),
        ("noise", &dec.noise),
    ];
    let mut written = Vec::new();
    for j in 0..dec.data.cols() {
        for (name, m) in parts {
            let mut img = unstack_column(m, j, dec.height, dec.width)?;
            if stretch {
                img = contrast_stretch(&img);
            }
            let path = out_dir.join(format!("{name}_{j:04}.pgm"));
            write_pgm(&path, &img.quantize())?;
            written.push(path);
        }
    }
    Ok(written)
}
