use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sticky-seq"));
    c.env("STICKY_SEQ_WORKERS", "1");
    c
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"{
    "problem": {"kind": "bai", "arms": 2},
    "family": {"kind": "gaussian", "sigma": 1.0, "mean_interval": [-1.0, 2.0]},
    "mu": [1.0, 0.0],
    "deltas": [0.1],
    "rules": ["tas", "sticky-order"],
    "trials": 8,
    "base_seed": 5
}"#;

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["summary.csv", "trials.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert_eq!(fs::read_to_string(a.join("trials.csv")).unwrap().lines().count(), 17);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("metadata.json")).unwrap()).unwrap();
    assert!(meta["config"]["trials"] == 8);
    assert!(!a.join("traces.jsonl").exists());
}

#[test]
fn tstar_prints_the_characteristic_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = run(&["tstar", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["t_star"].as_f64().unwrap() - 8.0).abs() < 1e-3);
}

#[test]
fn cover_bound_is_below_the_characteristic_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SMALL
            .replace(r#"{"kind": "bai", "arms": 2}"#, r#"{"kind": "identity-regression", "eps": 0.1}"#)
            .replace("[-1.0, 2.0]", "[0.0, 1.0]")
            .replace("[1.0, 0.0]", "[0.48]"),
    );
    let o = run(&["cover-bound", cfg.to_str().unwrap(), "--rho", "0.02"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let bound = v["bound"].as_f64().unwrap();
    assert!(bound > 100.0 && bound <= 200.0 * 1.01, "{bound}");
}

#[test]
fn check_reports_non_identifiable_problems() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), SMALL);
    assert_eq!(run(&["check", ok.to_str().unwrap()]).status.code(), Some(0));
    let bad = write_config(dir.path(), &SMALL.replace("[1.0, 0.0]", "[0.5, 0.5]"));
    let o = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["identifiable"], false);
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("\"trials\": 8", "\"trials\": \"many\""));
    let o = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials"));
    let missing = dir.path().join("absent.json");
    assert_eq!(run(&["tstar", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let cfg = sticky_seq_core::ExperimentConfig::from_json(&text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap();
    }
}
