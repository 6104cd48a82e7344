//! End-to-end runs of the `inls` binary: outputs, exit codes, reproducibility.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL_GRID: &str = r#"{"kind": "Radial", "n": 3, "dims": [512], "extent": [20.0], "cusp": 0.5}"#;

fn inls(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inls"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn small_config(c: f64) -> String {
    format!(
        r#"{{"params": {{"n": 3, "b": 0.5, "alpha": 2.0}}, "grid": {SMALL_GRID},
            "initial": {{"preset": "ground-state-multiple", "c": {c}}},
            "controls": {{"t_end": 0.02, "dt": 1e-3, "sample_every": 2}}}}"#
    )
}

fn reason(out: &Output) -> String {
    let line = String::from_utf8_lossy(&out.stderr);
    let v: serde_json::Value = serde_json::from_str(line.lines().last().unwrap_or("")).expect("stderr is one JSON line");
    assert_eq!(v["status"], "error");
    v["reason"].as_str().unwrap().to_string()
}

#[test]
fn ground_writes_outputs_and_guards_them() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "gs.json", &small_config(1.0));
    let out = inls(&["ground", "--config", &cfg, "--out", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("quantity,value"));
    for f in ["gs.json", "q.field", "thresholds.csv"] {
        assert!(tmp.path().join("run").join(f).exists(), "{f}");
    }

    let again = inls(&["ground", "--config", &cfg, "--out", "run"], tmp.path());
    assert_eq!(again.status.code(), Some(3));
    assert_eq!(reason(&again), "OutputConflict");

    let forced = inls(&["ground", "--config", &cfg, "--out", "run", "--force"], tmp.path());
    assert_eq!(forced.status.code(), Some(0));
}

#[test]
fn invalid_inputs_exit_with_validation_code() {
    let tmp = TempDir::new().unwrap();
    let bad_b = write(tmp.path(), "b.json", r#"{"params": {"n": 3, "b": 2.5, "alpha": 2.0}}"#);
    let out = inls(&["ground", "--config", &bad_b, "--out", "x"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(reason(&out), "OutOfRange(b)");

    let unknown = write(tmp.path(), "u.json", r#"{"params": {"n": 3, "b": 0.5, "alpha": 2.0}, "colour": 1}"#);
    let out = inls(&["ground", "--config", &unknown, "--out", "y"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("x").exists(), "nothing is written on validation failure");
}

#[test]
fn evolve_is_byte_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "e.json", &small_config(0.5));
    for dir in ["a", "b"] {
        let out = inls(&["evolve", "--config", &cfg, "--out", dir], tmp.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &str, f: &str| std::fs::read(tmp.path().join(d).join(f)).unwrap();
    for f in ["diag.csv", "final.field", "fate.json"] {
        assert_eq!(read("a", f), read("b", f), "{f} differs between runs");
    }
    let diag = String::from_utf8(read("a", "diag.csv")).unwrap();
    assert_eq!(diag.lines().count(), 1 + 11, "header plus samples at t = 0, 0.002, …, 0.02");

    let report = inls(&["report", "--out", "a"], tmp.path());
    assert_eq!(report.status.code(), Some(0));
    assert!(tmp.path().join("a/report.md").exists());
}

#[test]
fn classify_prints_a_verdict() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", &small_config(0.8));
    let out = inls(&["classify", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"]["theorem"], "BelowGlobal");
    assert_eq!(v["verdict"]["symmetry_route"], "Radial");
}

#[test]
fn empty_sweep_writes_a_header() {
    let tmp = TempDir::new().unwrap();
    let list = write(tmp.path(), "s.json", "[]");
    let out = inls(&["sweep", "--configs", &list, "--out", "s"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("s/fate_map.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("id,n,b,alpha,theorem,route,predicted_fate,observed_fate,"));
}

#[test]
fn sweep_keeps_going_past_a_bad_row() {
    let tmp = TempDir::new().unwrap();
    let list = format!(
        r#"[{}, {{"id": "bad", "params": {{"n": 3, "b": 2.5, "alpha": 2.0}}}}, {}]"#,
        small_config(0.5),
        small_config(1.2)
    );
    let list = write(tmp.path(), "s.json", &list);
    let out = inls(&["sweep", "--configs", &list, "--out", "s", "--jobs", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let csv = std::fs::read_to_string(tmp.path().join("s/fate_map.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("run000,3,0.5,2,BelowGlobal,"));
    assert!(rows[1].starts_with("bad,") && rows[1].contains("error:OutOfRange(b)"));
    assert!(rows[2].starts_with("run002,3,0.5,2,BelowBlowup,"));
}
