use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxlab"))
}

fn experiment(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../experiments")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_ppm_writes_trace_and_summary() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "run-ppm",
        "--config",
        arg(&experiment("quad1d_ppm.json")),
        "--out",
        arg(out.path()),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(out.path().join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("k,c_k,f,cost_gap,dist_S,residual_norm,eps_k,delta_k,criterion_ok")
    );
    assert!(lines.next().unwrap().starts_with("0,1e0,1e0,1e0,1e0,"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["passed"], true);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("report.json")).unwrap())
            .unwrap();
    let audit = report["audit"].as_array().unwrap();
    assert_eq!(audit.len(), 6);
    assert!(audit.iter().all(|a| a["outcome"] == "pass"));
}

#[test]
fn seed_override_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "svm.json",
        r#"{"problem": {"type": "ml", "kind": "svm", "rho_svm": 1,
            "data": {"source": "synthetic_blobs", "n": 30, "d": 4}},
           "schedule": {"kind": "constant", "c": 1}, "max_iter": 10, "seed": 1}"#,
    );
    let trace = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = run(&[
            "run-ppm",
            "--config",
            arg(&cfg),
            "--out",
            arg(&out),
            "--seed",
            seed,
        ]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out.join("trace.csv")).unwrap()
    };
    assert_eq!(trace("5", "a"), trace("5", "b"));
    assert_ne!(trace("5", "a"), trace("6", "c"));
}

#[test]
fn config_errors_exit_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        "{\n  \"problem\": {\"type\": \"benchmark\", \"id\": \"quad1d\"},\n  \"schedule\": 3\n}\n",
    );
    let o = run(&["run-ppm", "--config", arg(&cfg), "--out", arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = run(&[
        "run-gd",
        "--config",
        arg(&experiment("quad1d_ppm.json")),
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("solver"));
}

#[test]
fn bound_violation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // A PL constant far above the true one makes the cost bound fail.
    let cfg = write(
        dir.path(),
        "gd.json",
        r#"{"problem": {"type": "benchmark", "id": "aniso_quad(9)"},
           "gd": {"beta": 8.9}, "x0": [1, 1], "max_iter": 20, "test_mode": true}"#,
    );
    let o = run(&["run-gd", "--config", arg(&cfg), "--out", arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "run-gd",
        "--config",
        arg(&experiment("aniso_gd.json")),
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn estimate_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "audit",
        "--config",
        arg(&experiment("quad_quartic_audit.json")),
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&[
        "estimate",
        "--config",
        arg(&experiment("sine_quad_estimate.json")),
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["constants"]["flags"]["pl_fails_globally"], true);
    assert_eq!(report["constants"]["mu_e"]["value"], "inf");
}

#[test]
fn several_configs_in_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "run-ppm",
        "--config",
        arg(&experiment("quad1d_ppm.json")),
        "--config",
        arg(&experiment("wc_piecewise_ppm.json")),
        "--jobs",
        "2",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(dir.path().join("quad1d_ppm/trace.csv").is_file());
    assert!(dir.path().join("wc_piecewise_ppm/trace.csv").is_file());
}

#[test]
fn gen_data_then_load() {
    let dir = tempfile::tempdir().unwrap();
    let gen = write(
        dir.path(),
        "gen.json",
        r#"{"problem": {"type": "ml", "kind": "svm", "rho_svm": 1,
            "data": {"source": "synthetic_blobs", "n": 20, "d": 3}}, "seed": 9}"#,
    );
    let o = run(&["gen-data", "--config", arg(&gen), "--out", arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("data.libsvm").is_file());
    let load = write(
        dir.path(),
        "load.json",
        r#"{"problem": {"type": "ml", "kind": "svm", "rho_svm": 1,
            "data": {"source": "libsvm", "path": "data.libsvm"}},
           "schedule": {"kind": "constant", "c": 1}, "max_iter": 5}"#,
    );
    let o = run(&[
        "run-ppm",
        "--config",
        arg(&load),
        "--out",
        arg(&dir.path().join("run")),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
