use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use frakspace::SCHEMA_HEADER;

fn frakspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frakspace")).args(args).output().unwrap()
}

fn small_config(dir: &Path, budgets: &str) -> String {
    let path = dir.join("run.json");
    let text = format!(
        r#"{{
  "generators": [{{"name": "cantor4", "depths": [3, 4]}}],
  "alphas": [0.5, 1.5],
  "qs": [2, "inf"],
  "us": [2],
  "checks": {{"exactness_cubes": 20, "monotonicity_pairs": 30, "poincare_cubes": 20, "holder_trials": 20}},
  "budgets": {budgets}
}}"#
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn build_reports_size_and_dimension() {
    let out = frakspace(&["build", "cantor4", "--depth", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("64 points, s=1.26186\n"), "{stdout}");
    assert!(stdout.contains("ahlfors"));
}

#[test]
fn battery_lists_the_test_functions() {
    let out = frakspace(&["battery", "interval", "--depth", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().count() >= 12);
    assert!(stdout.contains("lacunary_b0.5"));
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    assert_eq!(frakspace(&["build", "no-such-generator"]).status.code(), Some(2));
    assert_eq!(frakspace(&["verify", "--config", "/nonexistent/run.json"]).status.code(), Some(2));
    assert_eq!(frakspace(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"ps": [0.5]}"#).unwrap();
    assert_eq!(frakspace(&["norms", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_writes_reports_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "{}");
    let out_dir = dir.path().join("out");
    let out = frakspace(&["verify", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("verify.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(SCHEMA_HEADER));
    let verdict = fs::read_to_string(out_dir.join("verdict.txt")).unwrap();
    assert!(verdict.lines().all(|l| l.ends_with("PASS")));
    assert!(verdict.contains("stability.poincare/cantor4/d3-d4"));
}

#[test]
fn zero_budget_fails_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), r#"{"poincare": 0}"#);
    let out_dir = dir.path().join("out");
    let out = frakspace(&["verify", "--config", &config, "--out", out_dir.to_str().unwrap(), "--depth", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let verdict = fs::read_to_string(out_dir.join("verdict.txt")).unwrap();
    assert!(verdict.lines().any(|l| l.starts_with("poincare/cantor4/d3") && l.ends_with("FAIL")));
}

#[test]
fn norms_writes_one_row_per_function_and_parameter_set() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "{}");
    let out_dir = dir.path().join("out");
    let out = frakspace(&["norms", "--config", &config, "--out", out_dir.to_str().unwrap(), "--depth", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("norms.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(SCHEMA_HEADER));
    assert!(lines.next().unwrap().starts_with("name,generator,depth,alpha"));
    // 17 functions x 2 alphas x 1 p x 2 qs x 1 u
    assert_eq!(lines.count(), 17 * 2 * 2);
}
