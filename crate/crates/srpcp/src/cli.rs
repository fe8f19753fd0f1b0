//! Command-line front end: `gen`, `solve`, `bench` and `video`.
//!
//! Exit codes: 0 when the solve met its tolerance, 2 on the iteration
//! budget, 3 on the time budget, 4 when the iterate overfits, 1 on errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use srpcp_core::solver::{solve_with, Mode, Problem, SolveResult, SolverConfig, Termination};
use srpcp_core::synthetic::gen_synthetic;
use srpcp_core::DenseMatrix;

use crate::bench::{self, BenchCell, BenchSpec};
use crate::frames::load_frame_stack;
use crate::matrix_io::{load_matrix, save_matrix, MatrixFormat};
use crate::video::{self, VideoOptions, VIDEO_TOLERANCE};
use crate::{IoError, IoResult, Stopwatch};

/// Errors are reported as their message and exit code 1.
type CliResult<T> = Result<T, String>;

/// Default per-solve time cap of the benchmark harness.
pub const BENCH_TIME_CAP: Duration = Duration::from_secs(5 * 3600);

#[derive(Debug, Parser)]
#[command(name = "srpcp", version, about = "Square-root principal component pursuit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic instance D = L0 + S0 + Z0.
    Gen(GenArgs),
    /// Decompose a matrix file into low-rank and sparse parts.
    Solve(SolveArgs),
    /// Run a grid of synthetic instances and write a CSV of results.
    Bench(BenchArgs),
    /// Split a directory of PGM frames into background, foreground and noise.
    Video(VideoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Plain,
    Acc,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Plain => Mode::Plain,
            ModeArg::Acc => Mode::Accelerated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Raw,
    Csv,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> MatrixFormat {
        match f {
            FormatArg::Raw => MatrixFormat::RawF64,
            FormatArg::Csv => MatrixFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub r: usize,
    /// Number of nonzero entries of S0.
    #[arg(long)]
    pub s: usize,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Acc)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    /// Initial rank guess of the accelerated mode.
    #[arg(long, default_value_t = 10)]
    pub k0: usize,
    #[arg(long, default_value_t = 1)]
    pub delta_k: usize,
    /// Evaluate the KKT residual every this many iterations.
    #[arg(long, default_value_t = 1)]
    pub check_period: usize,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub max_time: Option<f64>,
    /// Print one line per iteration to stderr.
    #[arg(long)]
    pub verbose: bool,
}

impl SolverArgs {
    fn config(&self, default_time: Option<Duration>) -> CliResult<SolverConfig> {
        let max_wall_time = match self.max_time {
            Some(t) if t.is_finite() && t > 0.0 => Some(Duration::from_secs_f64(t)),
            Some(t) => return Err(format!("--max-time must be positive, got {t}")),
            None => default_time,
        };
        Ok(SolverConfig {
            tolerance: self.eps,
            max_iterations: self.max_iter,
            max_wall_time,
            mode: self.mode.into(),
            initial_rank: self.k0,
            delta_k: self.delta_k,
            residual_check_period: self.check_period,
        })
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Matrix file (`.csv` or RawF64).
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to 1/sqrt(rows).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Defaults to sqrt(cols/2).
    #[arg(long)]
    pub mu: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Prefix of the output files.
    #[arg(long, default_value = "srpcp_")]
    pub out_prefix: String,
    #[arg(long, value_enum, default_value_t = FormatArg::Raw)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "20")]
    pub r: Vec<usize>,
    /// Support sizes of S0; overrides --s-frac.
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<usize>,
    /// Support sizes as fractions of n².
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    pub s_frac: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sigma: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "plain,acc")]
    pub modes: Vec<ModeArg>,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    /// Per-solve wall-clock budget in seconds (default five hours).
    #[arg(long)]
    pub max_time: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub k0: usize,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VideoArgs {
    /// Directory of equally sized binary PGM frames.
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long, default_value_t = VIDEO_TOLERANCE)]
    pub eps: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Contrast-stretch every output frame.
    #[arg(long)]
    pub stretch: bool,
    #[arg(long, value_enum, default_value_t = ModeArg::Acc)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub verbose: bool,
}

/// Parameters echoed by `gen` next to the matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    pub r: usize,
    pub s: usize,
    pub sigma: f64,
    pub seed: u64,
    pub generator: String,
    pub files: Vec<String>,
}

pub fn exit_code(t: Termination) -> u8 {
    match t {
        Termination::Tolerance => 0,
        Termination::MaxIter => 2,
        Termination::TimeOut => 3,
        Termination::Overfit => 4,
    }
}

pub fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Tolerance => "tolerance",
        Termination::MaxIter => "max-iter",
        Termination::TimeOut => "timeout",
        Termination::Overfit => "overfit",
    }
}

/// Parses `std::env::args` and runs the command.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a).map(|_| 0).map_err(|e| e.to_string()),
        Command::Solve(a) => cmd_solve(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Video(a) => cmd_video(&a),
    }
}

pub fn cmd_gen(a: &GenArgs) -> IoResult<Manifest> {
    let inst = gen_synthetic(a.n, a.r, a.s, a.sigma, a.seed)?;
    fs::create_dir_all(&a.out).map_err(|e| IoError::at(&a.out, e))?;
    let parts = [("D", &inst.d), ("L0", &inst.l0), ("S0", &inst.s0), ("Z0", &inst.z0)];
    let mut files = Vec::new();
    for (name, m) in parts {
        let file = format!("{name}.srpm");
        save_matrix(&a.out.join(&file), m, MatrixFormat::RawF64)?;
        files.push(file);
    }
    let manifest = Manifest {
        n: a.n,
        r: a.r,
        s: a.s,
        sigma: a.sigma,
        seed: a.seed,
        generator: "chacha20/ziggurat".into(),
        files,
    };
    let path = a.out.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, json + "\n").map_err(|e| IoError::at(&path, e))?;
    println!("wrote {} files to {}", manifest.files.len() + 1, a.out.display());
    Ok(manifest)
}

fn output_path(prefix: &str, name: &str, format: MatrixFormat) -> PathBuf {
    let ext = match format {
        MatrixFormat::Csv => "csv",
        MatrixFormat::RawF64 => "srpm",
    };
    PathBuf::from(format!("{prefix}{name}.{ext}"))
}

/// `(iterations + 1) x 3` matrix of `iteration, objective, rank`.
pub fn objective_table(r: &SolveResult) -> IoResult<DenseMatrix> {
    let rows: Vec<[f64; 3]> = r
        .objective_history
        .iter()
        .zip(&r.rank_history)
        .enumerate()
        .map(|(i, (&obj, &rank))| [i as f64, obj, rank as f64])
        .collect();
    Ok(DenseMatrix::from_rows(&rows)?)
}

/// `checks x 4` matrix of `iteration, eta, delta1, delta2`; `None` when
/// the residual was never evaluated.
pub fn residual_table(r: &SolveResult) -> IoResult<Option<DenseMatrix>> {
    if r.residual_history.is_empty() {
        return Ok(None);
    }
    let rows: Vec<[f64; 4]> = r
        .residual_history
        .iter()
        .map(|h| {
            [
                h.iteration as f64,
                h.residual.eta,
                h.residual.delta1,
                h.residual.delta2,
            ]
        })
        .collect();
    Ok(Some(DenseMatrix::from_rows(&rows)?))
}

pub fn cmd_solve(a: &SolveArgs) -> CliResult<u8> {
    let d = load_matrix(&a.input, MatrixFormat::from_path(&a.input)).map_err(|e| e.to_string())?;
    let (l0, m0) = srpcp_core::solver::default_parameters(d.rows(), d.cols());
    let problem = Problem::new(d, a.lambda.unwrap_or(l0), a.mu.unwrap_or(m0)).map_err(|e| e.to_string())?;
    let config = a.solver.config(None)?;
    let mut watch = Stopwatch::start(a.solver.verbose);
    let result = solve_with(&problem, &config, &mut watch).map_err(|e| e.to_string())?;
    write_solve_outputs(&a.out_prefix, a.format.into(), &result).map_err(|e| e.to_string())?;
    let eta = result
        .final_residual()
        .map_or(String::from("n/a"), |r| format!("{:.3e}", r.eta));
    println!(
        "{}: iterations {} eta {eta} objective {} rank {}",
        termination_name(result.termination),
        result.iterations,
        result.final_objective(),
        result.final_rank()
    );
    Ok(exit_code(result.termination))
}

pub fn write_solve_outputs(prefix: &str, format: MatrixFormat, result: &SolveResult) -> IoResult<()> {
    save_matrix(&output_path(prefix, "L_hat", format), &result.l_hat, format)?;
    save_matrix(&output_path(prefix, "S_hat", format), &result.s_hat, format)?;
    let csv = MatrixFormat::Csv;
    save_matrix(&output_path(prefix, "objective_history", csv), &objective_table(result)?, csv)?;
    if let Some(t) = residual_table(result)? {
        save_matrix(&output_path(prefix, "residual_history", csv), &t, csv)?;
    }
    Ok(())
}

fn bench_spec(a: &BenchArgs) -> CliResult<BenchSpec> {
    let mut cells = Vec::new();
    for &n in &a.n {
        let supports: Vec<usize> = if a.s.is_empty() {
            a.s_frac.iter().map(|f| (f * (n * n) as f64).round() as usize).collect()
        } else {
            a.s.clone()
        };
        for &r in &a.r {
            for &s in &supports {
                for &sigma in &a.sigma {
                    cells.push(BenchCell { n, r, s, sigma });
                }
            }
        }
    }
    let solver = SolverArgs {
        eps: a.eps,
        mode: ModeArg::Plain,
        max_iter: a.max_iter,
        k0: a.k0,
        delta_k: 1,
        check_period: 1,
        max_time: a.max_time,
        verbose: false,
    };
    Ok(BenchSpec {
        cells,
        seeds: a.seeds.clone(),
        modes: a.modes.iter().map(|&m| m.into()).collect(),
        config: solver.config(Some(BENCH_TIME_CAP))?,
    })
}

pub fn cmd_bench(a: &BenchArgs) -> CliResult<u8> {
    let spec = bench_spec(a)?;
    let report = |row: &bench::BenchRow| match &row.outcome {
        Ok(m) => eprintln!(
            "n={} r={} s={} sigma={} seed={} {}: {} in {:.0} ms",
            row.cell.n,
            row.cell.r,
            row.cell.s,
            row.cell.sigma,
            row.seed,
            bench::mode_name(row.mode),
            termination_name(m.termination),
            m.wall_ms
        ),
        Err(e) => eprintln!(
            "n={} r={} s={} sigma={} seed={} {}: failed: {e}",
            row.cell.n,
            row.cell.r,
            row.cell.s,
            row.cell.sigma,
            row.seed,
            bench::mode_name(row.mode)
        ),
    };
    let rows = bench::run_bench(&spec, bench::thread_cap(), &report);
    let file = fs::File::create(&a.out).map_err(|e| IoError::at(&a.out, e).to_string())?;
    bench::write_bench_csv(file, &rows).map_err(|e| e.to_string())?;
    println!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(0)
}

pub fn cmd_video(a: &VideoArgs) -> CliResult<u8> {
    let stack = load_frame_stack(&a.frames).map_err(|e| e.to_string())?;
    let opts = VideoOptions {
        config: SolverConfig {
            tolerance: a.eps,
            max_iterations: a.max_iter,
            mode: a.mode.into(),
            ..VideoOptions::default().config
        },
        lambda: a.lambda,
        mu: a.mu,
        verbose: a.verbose,
    };
    let dec = video::decompose(&stack, &opts).map_err(|e| e.to_string())?;
    let written = video::write_outputs(&dec, &a.out, a.stretch).map_err(|e| e.to_string())?;
    let eta = dec
        .result
        .final_residual()
        .map_or(String::from("n/a"), |r| format!("{:.3e}", r.eta));
    println!(
        "{}: {} frames, rank {} eta {eta}, wrote {} images to {}",
        termination_name(dec.result.termination),
        stack.frames.len(),
        dec.result.final_rank(),
        written.len(),
        a.out.display()
    );
    Ok(exit_code(dec.result.termination))
}
