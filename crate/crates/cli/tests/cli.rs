//! End-to-end runs of the `spikesim` binary: exit codes and written files.

use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = r#"
schema_version = 1
[model]
family = "bb_linear"
b = 1.0
epsilon = 0.0
[boundaries]
preset = "example1"
[run]
paths = 2000
seed = 5
triples = [[1.5, 1.0, 2.0], [1.0, 1.0, 2.0]]
"#;

fn spikesim(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_spikesim"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

#[test]
fn hitprob_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = spikesim(dir.path(), BASE, &["hitprob"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/hitprob.csv")).unwrap();
    assert!(csv.starts_with("# spikesim hitprob"));
    assert_eq!(spikesim_cli::csv_body(&csv).lines().count(), 3);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/hitprob.report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    assert_eq!(report["seed"], 5);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = spikesim(dir.path(), BASE, &["hitprob", "--seed", "17"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/hitprob.report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 17);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = BASE.replace("b = 1.0", "b = 1.0\nslope = 2.0");
    assert_eq!(spikesim(dir.path(), &unknown, &["hitprob"]).status.code(), Some(2));
    let version = BASE.replace("schema_version = 1", "schema_version = 9");
    assert_eq!(spikesim(dir.path(), &version, &["hitprob"]).status.code(), Some(2));
    let grid = format!("{BASE}[scaling]\neps_grid = [0.01, 0.1]\n");
    assert_eq!(spikesim(dir.path(), &grid, &["scaling-sweep"]).status.code(), Some(2));
    let negative = BASE.replace("b = 1.0", "b = -1.0");
    assert_eq!(spikesim(dir.path(), &negative, &["hitprob"]).status.code(), Some(2));
    // `validate` without Taylor bounds.
    assert_eq!(spikesim(dir.path(), BASE, &["validate"]).status.code(), Some(2));
}

#[test]
fn missing_config_flag_exits_with_two() {
    let out = Command::new(env!("CARGO_BIN_EXE_spikesim")).arg("hitprob").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_spikesim"))
        .arg("no-such-command")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_reports_violations_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let good = r#"
schema_version = 1
[model]
family = "bb_linear"
b = 1.0
epsilon = 0.01
taylor = { a = 1.0, b = 1.0, sigma_prime = 1.0, m = 1.0, delta0 = 0.2 }
[boundaries]
preset = "example1"
"#;
    assert_eq!(spikesim(dir.path(), good, &["validate"]).status.code(), Some(0));
    // A bound constant that the coefficients do not meet.
    let bad = good.replace("b = 1.0, sigma", "b = 3.0, sigma");
    assert_eq!(spikesim(dir.path(), &bad, &["validate"]).status.code(), Some(1));
}

#[test]
fn scaling_sweep_runs_for_rabi() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
schema_version = 1
[model]
family = "rabi_linearized"
b = 1.0
epsilon = 0.05
[boundaries]
preset = "rabi"
[scaling]
eps_grid = [0.1, 0.07, 0.05]
"#;
    let out = spikesim(dir.path(), cfg, &["scaling-sweep"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/scaling-sweep.csv")).unwrap();
    let body = spikesim_cli::csv_body(&csv);
    assert!(body.lines().next().unwrap().contains("rabi_ratio"));
}

#[test]
fn numerical_failure_exits_with_three() {
    // Starting above z, every hitting time is zero and the tail sample is empty.
    let dir = tempfile::tempdir().unwrap();
    let cfg = BASE
        .replace("epsilon = 0.0", "epsilon = 0.05")
        .replace("seed = 5", "seed = 5\nx_start = 1.5\nz_target = 1.0");
    let out = spikesim(dir.path(), &cfg, &["hitting-law"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
