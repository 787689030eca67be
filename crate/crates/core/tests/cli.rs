mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{bits, config_path};
use hktflow::io::{load_checkpoint, read_history};

fn hktflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hktflow")).args(args).output().expect("binary runs")
}

fn cfg(name: &str) -> String {
    config_path(name).to_string_lossy().into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A bundled config with some top-level fields replaced.
fn variant(dir: &Path, name: &str, edits: &[(&str, serde_json::Value)]) -> String {
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(config_path(name)).unwrap()).unwrap();
    for (k, v) in edits {
        doc[*k] = v.clone();
    }
    let path = dir.join(format!("{}-{name}", edits.len()));
    std::fs::write(&path, doc.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_then_verify_bundled_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let run = hktflow(&["run", &cfg("ma_n1_quick.json"), "--out", s(&out)]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    assert!(report["theta"].as_f64().unwrap() < 1e-8);
    let history = read_history(&out.join("history.csv")).unwrap();
    assert_eq!(history.last().unwrap().step, report["steps"].as_u64().unwrap());

    let verify = hktflow(&["verify", &cfg("ma_n1_quick.json"), s(&out.join("state.hktf"))]);
    assert_eq!(verify.status.code(), Some(0));
    let text = String::from_utf8(verify.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-7, "{text}");

    let diag = hktflow(&["diag", s(&out.join("history.csv"))]);
    assert_eq!(diag.status.code(), Some(0), "{}", String::from_utf8_lossy(&diag.stdout));
    let d: serde_json::Value = serde_json::from_slice(&diag.stdout).unwrap();
    assert!(d["decay"]["delta_hat"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_rejects_unconverged_state() {
    let dir = tempfile::tempdir().unwrap();
    let short = variant(dir.path(), "ma_n1_quick.json", &[("max_steps", 10.into())]);
    let out = dir.path().join("o");
    assert_eq!(hktflow(&["run", &short, "--out", s(&out)]).status.code(), Some(4));
    let verify = hktflow(&["verify", &short, s(&out.join("state.hktf"))]);
    assert_eq!(verify.status.code(), Some(5));
}

#[test]
fn inadmissible_initial_data_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = hktflow(&["run", &cfg("bad_phi0.json"), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("phi0"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(hktflow(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hktflow(&["run"]).status.code(), Some(1));
    assert_eq!(hktflow(&["oracle", "--samples", "many"]).status.code(), Some(1));
    assert_eq!(hktflow(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_and_malformed_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hktflow(&["run", s(&dir.path().join("nope.json"))]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 1, "points_per_dim": 8, "operator": {"kind": "log_moore"}}"#).unwrap();
    let out = hktflow(&["run", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("operator.kind"));
}

#[test]
fn resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let whole = variant(d, "hessian_n2_k2.json", &[("max_steps", 90.into())]);
    let first = variant(d, "hessian_n2_k2.json", &[("max_steps", 40.into()), ("checkpoint_every", 20.into())]);
    assert_eq!(hktflow(&["run", &whole, "--out", s(&d.join("a"))]).status.code(), Some(4));
    assert_eq!(hktflow(&["run", &first, "--out", s(&d.join("b"))]).status.code(), Some(4));
    let resumed = hktflow(&["resume", &whole, s(&d.join("b/state.hktf")), "--out", s(&d.join("b"))]);
    assert_eq!(resumed.status.code(), Some(4), "{}", String::from_utf8_lossy(&resumed.stderr));

    let a = load_checkpoint(&d.join("a/state.hktf")).unwrap();
    let b = load_checkpoint(&d.join("b/state.hktf")).unwrap();
    assert_eq!(a.step, 90);
    assert_eq!((a.step, a.t.to_bits()), (b.step, b.t.to_bits()));
    assert_eq!(bits(&a.values), bits(&b.values));
    let ha = std::fs::read(d.join("a/history.csv")).unwrap();
    let hb = std::fs::read(d.join("b/history.csv")).unwrap();
    assert_eq!(ha, hb);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let short = variant(d, "psh_n2.json", &[("max_steps", 30.into())]);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = d.join(threads);
        let status = Command::new(env!("CARGO_BIN_EXE_hktflow"))
            .args(["run", &short, "--out", s(&out)])
            .env("HKTFLOW_THREADS", threads)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(4));
        outputs.push((std::fs::read(out.join("state.hktf")).unwrap(), std::fs::read(out.join("history.csv")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);

    let bad = Command::new(env!("CARGO_BIN_EXE_hktflow"))
        .args(["oracle", "--samples", "5"])
        .env("HKTFLOW_THREADS", "zero")
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(1));
}

#[test]
fn oracle_suites_pass() {
    let out = hktflow(&["oracle", "--samples", "300", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for suite in ["moore_squared_vs_chi_det", "chi_eigenvalue_pairing", "gradient_fd", "wedge_normalization"] {
        assert!(text.contains(suite), "{text}");
    }
    assert!(!text.contains("FAIL"));
}

#[test]
fn manufacture_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.csv");
    let out = hktflow(&["manufacture", &cfg("ma_n1_quick.json"), "--out", s(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x0^1,x1^1,x2^1,x3^1,h");
    assert_eq!(lines.count(), 8usize.pow(4));

    assert_eq!(hktflow(&["manufacture", &cfg("hessian_n2_k1.json")]).status.code(), Some(2));
}

#[test]
fn diag_reports_bad_shift_and_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let short = variant(dir.path(), "ma_n1_quick.json", &[("max_steps", 30.into())]);
    let out = dir.path().join("o");
    hktflow(&["run", &short, "--out", s(&out)]);
    let diag = hktflow(&["diag", s(&out.join("history.csv")), "--shift", "-5"]);
    assert_eq!(diag.status.code(), Some(5));
    let d: serde_json::Value = serde_json::from_slice(&diag.stdout).unwrap();
    assert!(d["harnack"]["error"].as_str().unwrap().contains("non-positive"));
    assert_eq!(hktflow(&["diag", s(&dir.path().join("none.csv"))]).status.code(), Some(2));
}
