use std::path::Path;
use std::process::{Command, Output};

use crystal_pr::io::measurements_from_csv;

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crystal-pr")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn sample_measure_recover_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cli(d, &["--seed", "7", "model", "sample-basis", "--n", "12", "--out", "basis.json"])), 0);
    let sample = ["--seed", "3", "model", "sample-signal", "--basis", "basis.json", "--m", "3", "--support", "1,5,8", "--out", "signal.json"];
    assert_eq!(code(&cli(d, &sample)), 0);
    assert_eq!(code(&cli(d, &["spectrum", "--input", "signal.json", "--what", "b", "--out", "b.csv"])), 0);
    let b = measurements_from_csv(&std::fs::read_to_string(d.join("b.csv")).unwrap()).unwrap();
    assert_eq!(b.len(), 7);

    let out = cli(d, &["--seed", "3", "recover", "--basis", "basis.json", "--measurements", "b.csv", "--m", "3", "--support", "1,5,8"]);
    assert_eq!(code(&out), 0);
    let result: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result["converged"], true);
    assert_eq!(result["support"], serde_json::json!([1, 5, 8]));
}

#[test]
fn power_spectrum_input_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    cli(d, &["--seed", "2", "model", "sample-basis", "--n", "8", "--field", "complex", "--out", "basis.json"]);
    cli(d, &["--seed", "2", "model", "sample-signal", "--basis", "basis.json", "--m", "2", "--support", "0,3", "--out", "x.json"]);
    cli(d, &["spectrum", "--input", "x.json", "--what", "power", "--out", "p.csv"]);
    let out = cli(d, &["recover", "--basis", "basis.json", "--measurements", "p.csv", "--m", "2", "--support", "0,3", "--power-spectrum"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result["converged"], true);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cli(d, &["scan", "--n", "8", "--trials", "0"])), 2);
    assert_eq!(code(&cli(d, &["scan", "--n", "8", "--m-min", "5", "--m-max", "2"])), 2);
    assert_eq!(code(&cli(d, &["spectrum", "--input", "missing.json"])), 2);
    assert_eq!(code(&cli(d, &["bounds", "--n", "3", "--m", "4"])), 2);
    assert_eq!(code(&cli(d, &["scan", "--bogus"])), 2);
    cli(d, &["model", "sample-basis", "--n", "6", "--out", "basis.json"]);
    assert_eq!(code(&cli(d, &["certify", "--basis", "basis.json", "--m", "2", "--field", "complex"])), 2);
}

#[test]
fn guard_violations_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cli(d, &["scan", "--n", "100", "--trials", "1"])), 3);
    assert_eq!(code(&cli(d, &["scan", "--n", "40", "--m-min", "10", "--m-max", "10", "--trials", "1", "--support-search"])), 3);
    cli(d, &["model", "sample-basis", "--n", "20", "--out", "basis.json"]);
    assert_eq!(code(&cli(d, &["certify", "--basis", "basis.json", "--m", "5"])), 3);
}

#[test]
fn bounds_table_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["bounds", "--table", "--m-max", "8", "--n-max", "64"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let cells: usize = (1..=64usize).map(|n| n.min(8)).sum();
    assert_eq!(text.lines().count(), 1 + 2 * cells);
    assert!(text.contains("\n16,4,real,every-vector,"));
    assert!(text.contains("\n12,4,real,generic-only,"));
}
