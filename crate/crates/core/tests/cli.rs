use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use toof::bench::{SUMMARY_HEADER, TRACE_HEADER};

fn toof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toof"))
        .args(args)
        .output()
        .expect("toof binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const SMALL: &str = r#"{
  "arms": 3, "features": 5, "horizon": 40, "seeds": [4, 5],
  "algorithms": ["toof", "round_robin"], "gamma_mode": "tuned", "c": 0.01
}"#;

#[test]
fn run_writes_both_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let res = toof(&["run", "--config", &cfg, "--output", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some(TRACE_HEADER));
    assert_eq!(lines.count(), 2 * 2 * 40);

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some(SUMMARY_HEADER));
    assert_eq!(lines.count(), 2 * 40);
}

#[test]
fn seed_and_algorithm_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let res = toof(&[
        "run",
        "--config",
        &cfg,
        "--seed-override",
        "9",
        "--algorithms",
        "greedy,optimal",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let rows: Vec<&str> = trace.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 40);
    assert!(rows.iter().all(|r| r.starts_with("greedy,9,") || r.starts_with("optimal,9,")));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), r#"{ "arms": 3, "colour": "red" }"#);
    assert_eq!(toof(&["run", "--config", &unknown]).status.code(), Some(1));

    let bad_features = write_config(dir.path(), r#"{ "features": 4 }"#);
    assert_eq!(toof(&["run", "--config", &bad_features]).status.code(), Some(1));

    assert_eq!(toof(&["run", "--config", "/nonexistent/cfg.json"]).status.code(), Some(1));

    let cfg = write_config(dir.path(), SMALL);
    let res = toof(&["run", "--config", &cfg, "--algorithms", "random"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("random"));

    assert_eq!(toof(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn check_reports_three_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{ "arms": 4, "horizon": 200, "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9] }"#,
    );
    let res = toof(&["check", "--config", &cfg]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stdout));
    let stdout = String::from_utf8(res.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| l.starts_with("PASS ")));
}

#[test]
fn version_prints_package_version() {
    let res = toof(&["version"]);
    assert!(res.status.success());
    assert_eq!(
        String::from_utf8(res.stdout).unwrap().trim(),
        format!("toof {}", env!("CARGO_PKG_VERSION"))
    );
}
