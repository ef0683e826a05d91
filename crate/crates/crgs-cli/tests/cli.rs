//! End-to-end runs of the `crgs` binary against small configs.

use std::fs;
use std::path::Path;
use std::process::Command;

fn crgs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crgs"))
}

fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

const GAUSSIAN_CFG: &str = r#"
seed = 11

[device]
layout = "chain:2"

[gate_set]
mode = "gaussian"
duration_ns = 120.0
knots = 31
"#;

fn make_gaussian_library(dir: &Path) {
    let cfg = dir.join("run.toml");
    write(&cfg, GAUSSIAN_CFG);
    let status = crgs()
        .args(["optimize", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn optimize_gaussian_writes_six_entry_library() {
    let dir = tempfile::tempdir().unwrap();
    make_gaussian_library(dir.path());
    let text = fs::read_to_string(dir.path().join("library.toml")).unwrap();
    assert_eq!(text.matches("[[entries]]").count(), 6);
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn missing_config_is_usage_error() {
    let status = crgs()
        .args(["optimize", "--config", "/nonexistent/run.toml"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn malformed_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, "[gate_set]\nmode = 3\n");
    let out = crgs()
        .args(["optimize", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // The parse error names its location.
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn simulate_writes_normalized_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    make_gaussian_library(dir.path());
    write(&dir.path().join("circ.txt"), "x 0\nsx 1\nrz 0 0.7\n");
    let cfg = dir.path().join("sim.toml");
    write(
        &cfg,
        &format!(
            "{GAUSSIAN_CFG}\n[simulate]\ncircuit_path = \"circ.txt\"\nlibrary_path = \"library.toml\"\nnoise = true\nshots = 128\n"
        ),
    );
    let status = crgs()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("probabilities.csv")).unwrap();
    let total: f64 = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-6, "total={total}");
    let counts = fs::read_to_string(dir.path().join("counts.csv")).unwrap();
    let shots: u64 = counts
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(shots, 128);
}

#[test]
fn benchmark_xy4_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    make_gaussian_library(dir.path());
    let cfg = dir.path().join("bench.toml");
    write(
        &cfg,
        &format!(
            "{GAUSSIAN_CFG}\n[benchmark]\nprotocol = \"xy4\"\nlibrary_path = \"library.toml\"\nn_qubits = 2\nrepetitions = [0, 1, 2, 3]\nshots = 256\n"
        ),
    );
    for sub in ["a", "b"] {
        let status = crgs()
            .args(["benchmark", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(sub))
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a/xy4.csv")).unwrap();
    let b = fs::read(dir.path().join("b/xy4.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        String::from_utf8(a).unwrap().lines().count(),
        5 // header + 4 repetition rows
    );
    assert!(dir.path().join("a/xy4_fit.txt").exists());
}

#[test]
fn benchmark_rc_reports_epc() {
    let dir = tempfile::tempdir().unwrap();
    make_gaussian_library(dir.path());
    let cfg = dir.path().join("bench.toml");
    write(
        &cfg,
        &format!(
            "{GAUSSIAN_CFG}\n[benchmark]\nprotocol = \"rc\"\nlibrary_path = \"library.toml\"\nn_qubits = 1\nrepetitions = [1, 4, 8]\nsequences = 2\nshots = 256\nnoise = true\n"
        ),
    );
    let status = crgs()
        .args(["benchmark", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = fs::read_to_string(dir.path().join("rc_fit.txt")).unwrap();
    assert!(report.contains("error_per_clifford"));
}

#[test]
fn calibrate_converges_on_gaussian_library() {
    let dir = tempfile::tempdir().unwrap();
    make_gaussian_library(dir.path());
    let cfg = dir.path().join("cal.toml");
    write(
        &cfg,
        &format!(
            "{GAUSSIAN_CFG}\n[calibrate]\nlibrary_path = \"library.toml\"\ninitial_error = 0.05\n"
        ),
    );
    let status = crgs()
        .args(["calibrate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for name in ["calibration_c0_x.txt", "calibration_c1_sx.txt"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.contains("converged: true"), "{name}: {text}");
    }
    let sx = fs::read_to_string(dir.path().join("calibration_c0_sx.txt")).unwrap();
    assert!(sx.contains("odd_repetitions: true"));
    let lib = fs::read_to_string(dir.path().join("library_calibrated.toml")).unwrap();
    assert!(lib.contains("calibrated_amplitude/c0/x"));
}

#[test]
fn codesign_sweep_emits_factor_rows() {
    let dir = tempfile::tempdir().unwrap();
    make_gaussian_library(dir.path());
    let cfg = dir.path().join("sweep.toml");
    write(
        &cfg,
        &format!(
            r#"{GAUSSIAN_CFG}
[sweep]
kind = "codesign"
factors = [1.0, 2.0]

[[sweep.libraries]]
name = "gauss"
path = "library.toml"

[sweep.tfim]
n_qubits = 2
dt_ns = 10.0
"#
        ),
    );
    let status = crgs()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("codesign.csv")).unwrap();
    // header + 2 factors × 1 library × {plain, robust}
    assert_eq!(csv.lines().count(), 5);
    for line in csv.lines().skip(1) {
        let f: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(f > 0.5 && f <= 1.0 + 1e-9, "{line}");
    }
}
