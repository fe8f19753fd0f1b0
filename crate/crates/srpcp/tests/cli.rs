use std::path::Path;
use std::process::{Command, Output};

use srpcp::bench::read_bench_csv;
use srpcp::cli::Manifest;
use srpcp::frames::{write_pgm, GrayImage};
use srpcp::matrix_io::{load_matrix, MatrixFormat};

fn srpcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srpcp")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, n: &str, s: &str, seed: &str) {
    let out = srpcp(&["gen", "--n", n, "--r", "3", "--s", s, "--sigma", "1e-3", "--seed", seed, "--out", path_str(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_writes_five_files_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = srpcp(&["gen", "--n", "200", "--r", "5", "--s", "2000", "--sigma", "1e-3", "--seed", "7", "--out", path_str(a.path())]);
    assert!(out.status.success());
    let out = srpcp(&["gen", "--n", "200", "--r", "5", "--s", "2000", "--sigma", "1e-3", "--seed", "7", "--out", path_str(b.path())]);
    assert!(out.status.success());
    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["D.srpm", "L0.srpm", "S0.srpm", "Z0.srpm", "manifest.json"]);
    for name in &names {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let m: Manifest = serde_json::from_slice(&std::fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!((m.n, m.r, m.s, m.sigma, m.seed), (200, 5, 2000, 1e-3, 7));
}

#[test]
fn gen_rejects_oversized_support() {
    let dir = tempfile::tempdir().unwrap();
    let out = srpcp(&["gen", "--n", "10", "--r", "2", "--s", "101", "--sigma", "0", "--out", path_str(dir.path())]);
    assert!(!out.status.success());
}

#[test]
fn solve_end_to_end_and_modes_agree() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "60", "180", "3");
    let input = dir.path().join("D.srpm");
    let mut hats = Vec::new();
    for mode in ["plain", "acc"] {
        let prefix = dir.path().join(format!("{mode}_"));
        let out = srpcp(&["solve", "--input", path_str(&input), "--mode", mode, "--out-prefix", path_str(&prefix)]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(stdout.contains("iterations") && stdout.contains("rank"), "{stdout}");
        let l = load_matrix(&dir.path().join(format!("{mode}_L_hat.srpm")), MatrixFormat::RawF64).unwrap();
        // The histories are matrices the loader reads back.
        let obj = load_matrix(&dir.path().join(format!("{mode}_objective_history.csv")), MatrixFormat::Csv).unwrap();
        let res = load_matrix(&dir.path().join(format!("{mode}_residual_history.csv")), MatrixFormat::Csv).unwrap();
        assert_eq!(obj.cols(), 3);
        assert_eq!(res.cols(), 4);
        assert!(res.get(res.rows() - 1, 1) < 1e-6);
        hats.push(l);
    }
    let diff = hats[0].sub(&hats[1]).unwrap();
    assert!(srpcp_core::linalg::norm_fro(&diff) <= 1e-8);
}

#[test]
fn solve_budget_exit_code_and_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "30", "40", "1");
    let prefix = dir.path().join("o_");
    let out = srpcp(&[
        "solve", "--input", path_str(&dir.path().join("D.srpm")), "--max-iter", "1", "--format", "csv",
        "--out-prefix", path_str(&prefix),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let s = load_matrix(&dir.path().join("o_S_hat.csv"), MatrixFormat::Csv).unwrap();
    assert_eq!(s.shape(), (30, 30));
}

#[test]
fn solve_missing_input_fails() {
    let out = srpcp(&["solve", "--input", "/nonexistent/D.srpm"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn bench_single_cell() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = srpcp(&[
        "bench", "--n", "40", "--r", "2", "--sigma", "1e-3", "--modes", "acc", "--out", path_str(&csv),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = read_bench_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    let data: Vec<_> = recs.iter().filter(|r| r.seed.is_some()).collect();
    assert_eq!(data.len(), 1);
    assert_eq!(recs.iter().filter(|r| r.seed.is_none()).count(), 3);
    assert_eq!(recs[1].label, "mean");
    assert_eq!(data[0].cell.s, 80);
}

#[test]
fn bench_modes_agree_and_echo_objective() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = srpcp(&[
        "bench", "--n", "50", "--r", "3", "--s", "125", "--sigma", "1e-2", "--seeds", "4", "--out", path_str(&csv),
    ]);
    assert!(out.status.success());
    let recs = read_bench_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    let plain = recs.iter().find(|r| r.seed == Some(4) && r.label == "4" && r.mode == srpcp_core::solver::Mode::Plain).unwrap();
    let acc = recs.iter().find(|r| r.seed == Some(4) && r.mode == srpcp_core::solver::Mode::Accelerated).unwrap();
    let (p, a) = (plain.metrics.unwrap(), acc.metrics.unwrap());
    assert!((p[2] - a[2]).abs() <= 1e-6 && (p[3] - a[3]).abs() <= 1e-6);

    // The objective column is the solver's final objective.
    let inst = srpcp_core::synthetic::gen_synthetic(50, 3, 125, 1e-2, 4).unwrap();
    let problem = srpcp_core::solver::Problem::with_defaults(inst.d).unwrap();
    let res = srpcp_core::solver::alt_min(&problem, &Default::default()).unwrap();
    assert_eq!(p[4], res.final_objective());
}

fn scene(dir: &Path, frames: usize, height: usize, width: usize) {
    for t in 0..frames {
        let mut px = vec![0u8; height * width];
        for i in 0..height {
            for c in 0..width {
                // Smooth static background plus a few levels of sensor noise;
                // a noiseless scene is fitted exactly and stops as overfit.
                let noise = (i * 7919 + c * 104_729 + t * 15_485_863) % 7;
                px[i * width + c] = (37 + 3 * i + 2 * c + noise) as u8;
            }
        }
        // A bright 3x3 blob moving left to right.
        let c0 = 2 + 3 * t;
        for i in 5..8 {
            for c in c0..c0 + 3 {
                px[i * width + c] = 250;
            }
        }
        write_pgm(&dir.join(format!("frame_{t:03}.pgm")), &GrayImage::new(width, height, px).unwrap()).unwrap();
    }
}

#[test]
fn video_writes_frame_triples() {
    let frames = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    scene(frames.path(), 8, 16, 28);
    let run = srpcp(&["video", "--frames", path_str(frames.path()), "--out", path_str(out.path()), "--stretch"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stdout));
    let count = std::fs::read_dir(out.path()).unwrap().count();
    assert_eq!(count, 24);
    assert!(out.path().join("background_0007.pgm").exists());
    let empty = tempfile::tempdir().unwrap();
    let run = srpcp(&["video", "--frames", path_str(empty.path()), "--out", path_str(out.path())]);
    assert!(!run.status.success());
}
