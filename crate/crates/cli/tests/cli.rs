use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gstlab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// File body without the provenance comment line.
fn body(path: &Path) -> String {
    let s = fs::read_to_string(path).unwrap();
    s.split_once('\n').unwrap().1.to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ou_solve_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("ou.toml");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["--config", s(&cfg), "--out", s(out), "solve"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ra = json(&a.join("eigen_report.json"));
    let rb = json(&b.join("eigen_report.json"));
    assert_eq!(ra["artifact_hash"], rb["artifact_hash"]);
    assert_eq!(
        fs::read(a.join("solution.gstlab")).unwrap(),
        fs::read(b.join("solution.gstlab")).unwrap()
    );
    assert!(ra["lambda0"].as_f64().unwrap().abs() < 1e-8);
    assert!((ra["gap"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    assert_eq!(ra["config_hash"].as_str().unwrap().len(), 64);
    let manifest = json(&a.join("manifest.json"));
    assert!(manifest["solve"]["started_unix_s"].is_number());
    assert_eq!(manifest["solve"]["config"]["solver"]["residual_tol"], 1e-8);
}

#[test]
fn invalid_family_is_a_usage_error_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("ou.toml"))
        .unwrap()
        .replace("family = \"polynomial\"", "family = \"quartic\"");
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, text).unwrap();
    let o = run(&["--config", s(&cfg), "--out", s(dir.path()), "solve"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("potential.family") && err.contains("quartic"), "{err}");
}

#[test]
fn missing_profile_parameters_name_theta_and_delta() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = fs::read_to_string(configs().join("ou.toml")).unwrap();
    text = text.replace(
        "[envelope]\nintegral = \"general\"",
        "[envelope]\nintegral = \"general\"\nprofile = { family = \"iterated_log_power\", gamma = 1.0, d = 1, thetas = [], delta = 1.0 }",
    );
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, text).unwrap();
    let o = run(&["--config", s(&cfg), "--out", s(dir.path()), "envelope"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("θ") && err.contains("δ"), "{err}");
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--out", s(dir.path()), "verify", "--suite", "unknown"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown suite"));
}

#[test]
fn verify_suites_pass_and_write_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    for suite in ["ou", "sandwich", "comparison"] {
        let o = run(&["--out", s(dir.path()), "--threads", "2", "verify", "--suite", suite]);
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(o.status.success(), "{stdout}");
        assert!(stdout.contains("PASS"));
        let v = json(&dir.path().join("verify.json"));
        assert_eq!(v["suite"], suite);
        assert_eq!(v["passed"], true);
    }
    let o = run(&["--out", s(dir.path()), "report"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("comparison"));
}

#[test]
fn simulate_bodies_repeat_and_carry_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("ou.toml");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["--config", s(&cfg), "--out", s(out), "simulate"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(body(&a.join("paths.csv")), body(&b.join("paths.csv")));
    let head = fs::read_to_string(a.join("paths.csv")).unwrap();
    assert!(head.starts_with("# config_hash=") && head.lines().next().unwrap().contains("seed=1"));
    let summary = json(&a.join("simulate_summary.json"));
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["seed"], 1);
}

#[test]
fn envelope_classifications_do_not_depend_on_seed() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("jump_dominated.toml"))
        .unwrap()
        .replace("n_max = 1000000", "n_max = 20000");
    let cfg = dir.path().join("jd.toml");
    fs::write(&cfg, text).unwrap();
    let mut summaries = Vec::new();
    let mut traces = Vec::new();
    for seed in ["11", "12"] {
        let out = dir.path().join(seed);
        let o = run(&["--config", s(&cfg), "--out", s(&out), "--seed", seed, "envelope"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8_lossy(&o.stdout).to_string();
        assert!(stdout.contains("escape constant") && stdout.contains("empirical ĉ"), "{stdout}");
        summaries.push(json(&out.join("envelope_summary.json")));
        traces.push(body(&out.join("limsup_trace.csv")));
    }
    assert_eq!(summaries[0]["integrals"], summaries[1]["integrals"]);
    assert_ne!(traces[0], traces[1]);
    assert_ne!(summaries[0]["config_hash"], summaries[1]["config_hash"]);
    let esc = summaries[0]["escape_constant"]["value"].as_f64().unwrap();
    assert!((esc - 0.25).abs() < 1e-15);
    let c_low = summaries[0]["integrals"]["c_low"]["value"].as_f64().unwrap();
    assert!((c_low / esc - 1.0).abs() < 0.05);
    assert!(summaries[0]["empirical"]["c_hat"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_without_sampler_section_fails() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("jump_dominated.toml")).unwrap();
    let cfg = dir.path().join("jd.toml");
    fs::write(&cfg, text).unwrap();
    let o = run(&["--config", s(&cfg), "--out", s(dir.path()), "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sampler"));
}
