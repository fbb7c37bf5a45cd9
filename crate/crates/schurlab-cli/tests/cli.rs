//! End-to-end checks of the binary: exit codes, config validation, artifact
//! layout, byte-identical reruns, and the report round trip.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_schurlab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn stderr_record(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().next().expect("an error record on stderr");
    serde_json::from_str(line).expect("stderr line is a JSON record")
}

#[test]
fn verify_remark_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "verify",
        "remark",
        "--trials",
        "40",
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert_eq!(doc["command"], "verify-remark");
    assert_eq!(doc["pass"], true);
    assert!(doc["results"]["worst_residual"].as_f64().unwrap() < 1e-9);
    assert!(dir.path().join("verify_remark.json").is_file());
    let csv = std::fs::read_to_string(dir.path().join("verify_remark.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial,t0,t1,t2,t3,lhs,residual,tol,seed"
    );
    assert_eq!(lines.count(), 40);
}

#[test]
fn tolerance_breach_exits_three_with_record() {
    let out = run(&["verify", "remark", "--trials", "10", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(3));
    let doc = stdout_json(&out);
    assert_eq!(doc["pass"], false);
    let rec = stderr_record(&out);
    assert_eq!(rec["error"]["kind"], "tolerance");
}

#[test]
fn config_runs_and_unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.json");
    std::fs::write(
        &ok,
        r#"{"command": "verify-remark", "params": {"trials": 10, "seed": 3, "tol": 1e-9}}"#,
    )
    .unwrap();
    let out = run(&["--config", ok.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["pass"], true);

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"command": "verify-remark", "params": {"trials": 10, "seed": 3, "tol": 1e-9, "bogus": 1}}"#,
    )
    .unwrap();
    let out = run(&["--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let rec = stderr_record(&out);
    assert_eq!(rec["error"]["kind"], "validation");
    assert!(rec["error"]["message"].as_str().unwrap().contains("bogus"));

    // missing required key: configs pin every parameter
    let sparse = dir.path().join("sparse.json");
    std::fs::write(&sparse, r#"{"command": "verify-remark", "params": {"trials": 10, "seed": 3}}"#)
        .unwrap();
    let out = run(&["--config", sparse.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_record(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("tol"));
}

#[test]
fn config_and_subcommand_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, "{}").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "verify", "remark"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validation_failures_exit_two() {
    // linear-only symbol at arity 2
    let out = run(&["estimate", "--n", "2", "--symbol", "triangle"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_record(&out)["error"]["kind"], "validation");

    // aux flag of the wrong symbol family
    let out = run(&["estimate", "--symbol", "triangle", "--q", "0.5"]);
    assert_eq!(out.status.code(), Some(2));

    // malformed grid
    let out = run(&["sweep", "bound-curve", "--p-grid", "2,zebra"]);
    assert_eq!(out.status.code(), Some(2));

    // unknown flag is a clap-level validation failure
    let out = run(&["verify", "remark", "--zebra", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_reruns_are_byte_identical() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let args = |dir: &Path| {
        vec![
            "estimate".to_string(),
            "--n".into(),
            "1".into(),
            "--dim".into(),
            "12".into(),
            "--p".into(),
            "4".into(),
            "--restarts".into(),
            "4".into(),
            "--iters".into(),
            "15".into(),
            "--seed".into(),
            "21".into(),
            "--out".into(),
            dir.to_str().unwrap().to_string(),
        ]
    };
    let o1 = bin().args(args(d1.path())).output().unwrap();
    let o2 = bin().args(args(d2.path())).output().unwrap();
    assert_eq!(o1.status.code(), Some(0));
    assert_eq!(o2.status.code(), Some(0));
    let c1 = std::fs::read(d1.path().join("estimate_trace.csv")).unwrap();
    let c2 = std::fs::read(d2.path().join("estimate_trace.csv")).unwrap();
    assert_eq!(c1, c2, "same config and seed must give identical traces");
    assert!(!c1.is_empty());
}

#[test]
fn lowerbound_sweep_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "sweep",
        "lowerbound",
        "--n",
        "2",
        "--variant",
        "first",
        "--q",
        "0.5",
        "--k-grid",
        "20",
        "--l-grid",
        "40,80",
        "--dim",
        "6",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert_eq!(doc["results"]["monotone_in_l"], true);

    let rep = run(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(rep.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&rep.stderr));
    let text = String::from_utf8_lossy(&rep.stdout);
    assert!(text.contains("sweep-lowerbound"), "report text: {text}");
    assert!(text.contains("residual ~ l^"), "report fits the stored rows: {text}");
    assert!(dir.path().join("sweep_lowerbound_k20.dat").is_file());
    let dat = std::fs::read_to_string(dir.path().join("sweep_lowerbound_k20.dat")).unwrap();
    assert_eq!(dat.lines().count(), 2);

    // the report reads artifacts; an empty directory is an input error
    let empty = tempfile::tempdir().unwrap();
    let rep = run(&["report", empty.path().to_str().unwrap()]);
    assert_eq!(rep.status.code(), Some(2));
    assert_eq!(stderr_record(&rep)["error"]["kind"], "missing-input");
}

#[test]
fn thread_cap_is_validated() {
    let out = bin()
        .env("SCHURLAB_THREADS", "zebra")
        .args(["verify", "remark", "--trials", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .env("SCHURLAB_THREADS", "1")
        .args(["verify", "remark", "--trials", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
