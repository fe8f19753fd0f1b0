//! Synthetic benchmark grid.
//!
//! One row per (cell, seed, mode), then per (cell, mode) an aggregate block
//! of three rows whose `seed` column reads `mean`, `min` and `max`. A solve
//! that fails keeps its row with empty metric columns.

use std::io::{Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use srpcp_core::solver::{solve_with, Mode, Problem, SolverConfig, Termination};
use srpcp_core::synthetic::{gen_synthetic, recovery_errors};

use crate::error::{IoError, IoResult};
use crate::Stopwatch;

pub const HEADER: [&str; 12] = [
    "n", "r", "s", "sigma", "seed", "mode", "wall_ms", "iters", "eta_S", "eta_L", "obj", "rank",
];

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "SRPCP_THREADS";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchCell {
    pub n: usize,
    pub r: usize,
    pub s: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub cells: Vec<BenchCell>,
    pub seeds: Vec<u64>,
    pub modes: Vec<Mode>,
    /// Tolerance, budgets and rank options; `mode` is overridden per row.
    pub config: SolverConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchMetrics {
    pub wall_ms: f64,
    pub iterations: usize,
    pub eta_s: f64,
    pub eta_l: f64,
    pub objective: f64,
    pub rank: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub cell: BenchCell,
    pub seed: u64,
    pub mode: Mode,
    pub outcome: Result<BenchMetrics, String>,
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Plain => "plain",
        Mode::Accelerated => "acc",
    }
}

pub fn parse_mode(s: &str) -> Option<Mode> {
    match s {
        "plain" => Some(Mode::Plain),
        "acc" => Some(Mode::Accelerated),
        _ => None,
    }
}

/// `SRPCP_THREADS` if set to a positive integer, otherwise the available
/// parallelism.
pub fn thread_cap() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(available)
}

pub fn run_one(cell: BenchCell, seed: u64, mode: Mode, config: &SolverConfig) -> Result<BenchMetrics, String> {
    let inst = gen_synthetic(cell.n, cell.r, cell.s, cell.sigma, seed).map_err(|e| e.to_string())?;
    let problem = Problem::with_defaults(inst.d.clone()).map_err(|e| e.to_string())?;
    let config = SolverConfig {
        mode,
        ..config.clone()
    };
    let start = Instant::now();
    let mut watch = Stopwatch::start(false);
    let result = solve_with(&problem, &config, &mut watch).map_err(|e| e.to_string())?;
    let wall = start.elapsed();
    let errors = recovery_errors(&result.l_hat, &result.s_hat, &inst).map_err(|e| e.to_string())?;
    Ok(BenchMetrics {
        wall_ms: duration_ms(wall),
        iterations: result.iterations,
        eta_s: errors.eta_s,
        eta_l: errors.eta_l,
        objective: result.final_objective(),
        rank: result.final_rank(),
        termination: result.termination,
    })
}

fn duration_ms(d: Duration) -> f64 {
    (d.as_secs_f64() * 1e3 * 1e3).round() / 1e3
}

/// Runs every job on at most `threads` workers; rows come back in grid
/// order (cell, then seed, then mode) regardless of completion order.
pub fn run_bench(spec: &BenchSpec, threads: usize, on_row: &(dyn Fn(&BenchRow) + Sync)) -> Vec<BenchRow> {
    let mut jobs = Vec::new();
    for &cell in &spec.cells {
        for &seed in &spec.seeds {
            for &mode in &spec.modes {
                jobs.push((cell, seed, mode));
            }
        }
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<BenchRow>>> = Mutex::new(vec![None; jobs.len()]);
    let workers = threads.clamp(1, jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(cell, seed, mode)) = jobs.get(i) else {
                    break;
                };
                let row = BenchRow {
                    cell,
                    seed,
                    mode,
                    outcome: run_one(cell, seed, mode, &spec.config),
                };
                on_row(&row);
                slots.lock().unwrap()[i] = Some(row);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

fn cell_fields(c: &BenchCell) -> [String; 4] {
    [c.n.to_string(), c.r.to_string(), c.s.to_string(), c.sigma.to_string()]
}

pub fn write_bench_csv<W: Write>(w: W, rows: &[BenchRow]) -> IoResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER)?;
    for row in rows {
        let mut rec: Vec<String> = cell_fields(&row.cell).into();
        rec.push(row.seed.to_string());
        rec.push(mode_name(row.mode).into());
        match &row.outcome {
            Ok(m) => rec.extend([
                m.wall_ms.to_string(),
                m.iterations.to_string(),
                m.eta_s.to_string(),
                m.eta_l.to_string(),
                m.objective.to_string(),
                m.rank.to_string(),
            ]),
            Err(_) => rec.extend(std::iter::repeat_n(String::new(), 6)),
        }
        out.write_record(&rec)?;
    }
    for (cell, mode, ok) in groups(rows) {
        if ok.is_empty() {
            continue;
        }
        let cols: [Vec<f64>; 6] = [
            ok.iter().map(|m| m.wall_ms).collect(),
            ok.iter().map(|m| m.iterations as f64).collect(),
            ok.iter().map(|m| m.eta_s).collect(),
            ok.iter().map(|m| m.eta_l).collect(),
            ok.iter().map(|m| m.objective).collect(),
            ok.iter().map(|m| m.rank as f64).collect(),
        ];
        let stats: [(&str, fn(&[f64]) -> f64); 3] = [("mean", mean), ("min", min), ("max", max)];
        for (label, f) in stats {
            let mut rec: Vec<String> = cell_fields(&cell).into();
            rec.push(label.into());
            rec.push(mode_name(mode).into());
            rec.extend(cols.iter().map(|c| f(c).to_string()));
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Successful metrics grouped by (cell, mode), in first-appearance order.
fn groups(rows: &[BenchRow]) -> Vec<(BenchCell, Mode, Vec<BenchMetrics>)> {
    let mut out: Vec<(BenchCell, Mode, Vec<BenchMetrics>)> = Vec::new();
    for row in rows {
        let idx = match out.iter().position(|(c, m, _)| *c == row.cell && *m == row.mode) {
            Some(i) => i,
            None => {
                out.push((row.cell, row.mode, Vec::new()));
                out.len() - 1
            }
        };
        if let Ok(m) = &row.outcome {
            out[idx].2.push(*m);
        }
    }
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// One parsed line of a bench CSV. `seed` is `None` on aggregate rows and
/// `metrics` is `None` on failed solves.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub cell: BenchCell,
    pub seed: Option<u64>,
    pub label: String,
    pub mode: Mode,
    pub metrics: Option<[f64; 6]>,
}

pub fn read_bench_csv<R: Read>(r: R) -> IoResult<Vec<BenchRecord>> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(IoError::Format("unexpected bench header".into()));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |j: usize| -> IoResult<f64> {
            rec[j].parse().map_err(|_| IoError::Parse {
                line,
                column: j + 1,
                message: format!("not a number: {:?}", &rec[j]),
            })
        };
        let cell = BenchCell {
            n: field(0)? as usize,
            r: field(1)? as usize,
            s: field(2)? as usize,
            sigma: field(3)?,
        };
        let mode = parse_mode(&rec[5]).ok_or_else(|| IoError::Parse {
            line,
            column: 6,
            message: format!("unknown mode {:?}", &rec[5]),
        })?;
        let metrics = if rec[6].is_empty() {
            None
        } else {
            let mut m = [0.0; 6];
            for (k, slot) in m.iter_mut().enumerate() {
                *slot = field(6 + k)?;
            }
            Some(m)
        };
        out.push(BenchRecord {
            cell,
            seed: rec[4].parse().ok(),
            label: rec[4].to_string(),
            mode,
            metrics,
        });
    }
    Ok(out)
}
