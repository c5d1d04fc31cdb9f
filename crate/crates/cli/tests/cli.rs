//! End-to-end runs of the binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elliptic-dyson"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn default_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(&dir.path().join("verify_report.json"));
    let entries = report.as_array().unwrap();
    assert_eq!(entries.len(), 10);
    for e in entries {
        assert_eq!(e["pass"], Value::Bool(true), "{e}");
        for key in ["check_id", "description", "anchor", "max_residual", "tolerance", "wall_time"] {
            assert!(e.get(key).is_some(), "missing {key}");
        }
        assert!(e["max_residual"].as_f64().unwrap() <= e["tolerance"].as_f64().unwrap());
    }
    let manifest = json(&dir.path().join("verify_manifest.json"));
    assert_eq!(manifest["seed"], 1);
    assert!(manifest["git_describe"].as_str().is_some_and(|s| !s.is_empty()));
}

#[test]
fn tightened_tolerances_fail_with_named_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify", "--tol-scale", "1e-3"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&dir.path().join("verify_report.json"));
    let failed: Vec<&str> = report
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["pass"] == Value::Bool(false))
        .map(|e| e["check_id"].as_str().unwrap())
        .collect();
    assert!(!failed.is_empty());
    let stdout = String::from_utf8_lossy(&out.stdout);
    for id in failed {
        assert!(stdout.contains(&format!("FAIL {id}")), "{stdout}");
    }
}

#[test]
fn csv_report_format() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"format": "csv", "checks": ["villat_link", "biorthogonality"]}"#);
    let out = run(dir.path(), &["verify", "--config", &config]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("verify_report.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "check_id,description,anchor,max_residual,tolerance,pass,wall_time");
    assert_eq!(lines.len(), 3);
    assert!(text.ends_with('\n'));
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "{\n  \"seed\": 3,\n  \"samples\": }\n");
    let out = run(dir.path(), &["verify", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("ConfigInvalid") && stderr.contains("line 3, column"), "{stderr}");
}

#[test]
fn unknown_keys_and_bad_parameters_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"process": "ebes", "scheme": {"paths": 10}}"#);
    assert_eq!(run(dir.path(), &["simulate", "--config", &config]).status.code(), Some(2));
    let config = write_config(dir.path(), r#"{"points": [1.0, 1.0]}"#);
    assert_eq!(run(dir.path(), &["kernel", "--config", &config]).status.code(), Some(2));
    let config = write_config(dir.path(), r#"{"checks": ["nonexistent"]}"#);
    assert_eq!(run(dir.path(), &["verify", "--config", &config]).status.code(), Some(2));
}

#[test]
fn simulation_is_reproducible_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = write_config(a.path(), r#"{"scheme": {"n_paths": 200, "n_records": 4}}"#);
    assert_eq!(run(a.path(), &["simulate", "--config", &config, "--seed", "9", "--workers", "1"]).status.code(), Some(0));
    assert_eq!(run(b.path(), &["simulate", "--config", &config, "--seed", "9", "--workers", "3"]).status.code(), Some(0));
    let csv_a = fs::read(a.path().join("simulate.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.path().join("simulate.csv")).unwrap());
    assert_eq!(
        fs::read(a.path().join("simulate_manifest.json")).unwrap(),
        fs::read(b.path().join("simulate_manifest.json")).unwrap()
    );
    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.starts_with("path_id,t,x\n"));
    assert_eq!(text.lines().count(), 1 + 200 * 5);
    let manifest = json(&a.path().join("simulate_manifest.json"));
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config"]["scheme"]["n_paths"], 200);
}

#[test]
fn dyson_simulation_has_one_column_per_particle() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"process": "edys", "beta": 2.0, "u": [0.5, 2.0, 4.4], "horizon": 0.3, "scheme": {"n_paths": 20, "n_records": 3}}"#,
    );
    assert_eq!(run(dir.path(), &["simulate", "--config", &config]).status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
    assert!(text.starts_with("path_id,t,x_1,x_2,x_3\n"));
}

#[test]
fn kernel_table_has_unit_trace_per_particle() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"points": [1.0, 3.2], "times": [0.2, 0.6], "nodes": 48}"#);
    assert_eq!(run(dir.path(), &["kernel", "--config", &config]).status.code(), Some(0));
    let mut reader = csv::Reader::from_path(dir.path().join("kernel.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["s", "x", "t", "y", "K"]);
    let h = std::f64::consts::TAU / 48.0;
    let mut traces = [0.0f64; 2];
    let mut rows = 0;
    for record in reader.records() {
        let r: Vec<f64> = record.unwrap().iter().map(|v| v.parse().unwrap()).collect();
        rows += 1;
        if r[0] == r[2] && r[1] == r[3] {
            traces[usize::from(r[0] > 0.4)] += r[4] * h;
        }
    }
    assert_eq!(rows, 96 * 96);
    for trace in traces {
        assert!((trace - 2.0).abs() < 1e-6, "{trace}");
    }
}

#[test]
fn density_reports_both_columns_and_the_distance() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"bins": 16, "kernel_subnodes": 4, "scheme": {"n_paths": 2000, "dt": 0.002}}"#);
    assert_eq!(run(dir.path(), &["density", "--config", &config]).status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(text.starts_with("bin_center,mc_density,kernel_density,se\n"));
    assert_eq!(text.lines().count(), 17);
    let manifest = json(&dir.path().join("density_manifest.json"));
    let l1 = manifest["summary"]["l1_distance"].as_f64().unwrap();
    assert!(l1 > 0.0 && l1 < 0.1, "{l1}");
}

#[test]
fn pinned_quadrature_without_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"harmonics": [0, 1], "scheme": {"n_paths": 0}}"#);
    assert_eq!(run(dir.path(), &["pinned", "--config", &config]).status.code(), Some(0));
    let mut reader = csv::Reader::from_path(dir.path().join("pinned.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["observable", "quadrature", "mc_mean", "mc_se", "z"]);
    let first = reader.records().next().unwrap().unwrap();
    let constant: f64 = first[1].parse().unwrap();
    assert!((constant - 1.0).abs() < 1e-10);
    assert_eq!(&first[2], "");
}
