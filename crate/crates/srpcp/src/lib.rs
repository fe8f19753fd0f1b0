//! File formats, the frame-stack video pipeline, the benchmark harness and
//! the command-line front end around `srpcp-core`.

pub mod bench;
pub mod cli;
mod error;
pub mod frames;
pub mod matrix_io;
mod stopwatch;
pub mod video;

pub use error::{IoError, IoResult};
pub use stopwatch::Stopwatch;
