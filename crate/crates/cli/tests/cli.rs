use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn loa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loa")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn unknown_algorithm_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = loa(&["bench", "--algos", "gd,nope", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
}

#[test]
fn bad_flag_is_usage_error() {
    let o = loa(&["train", "--epochs", "many"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn equiv_check_matches_and_validates_against_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = loa(&["equiv-check", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(dir.path().join("config.json").exists());
    assert!(dir.path().join("table1.md").exists());
    let schema: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table1.schema.json")).unwrap()).unwrap();
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table1.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    assert!(validator.is_valid(&doc));
    assert_eq!(doc["rows"].as_array().unwrap().len(), 6);

    let mut broken = doc.clone();
    broken["rows"][0]["cells"]["translation"] = "maybe".into();
    assert!(!validator.is_valid(&broken));
}

#[test]
fn isotropic_adam_control_is_a_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let o = loa(&["equiv-check", "--isotropic-adam", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("adam / orthogonal"));
}

#[test]
fn training_rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = loa(&["train", "--epochs", "2", "--k", "10", "--seed", "7", "--out", &out_arg(d.path())]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(stdout.contains("epoch    0  mean loss 0.693147180560"), "{stdout}");
    }
    for f in ["loss_history.csv", "training_curve.csv", "weights.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let curve = fs::read_to_string(a.path().join("training_curve.csv")).unwrap();
    assert!(curve.lines().next().unwrap().ends_with("log2"));
    assert!(a.path().join("checkpoints/best.json").exists());
    let config: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(config["train"]["epochs"], 2);
    assert_eq!(config["train"]["lr_skip"], 1e-3);
}

#[test]
fn bench_writes_one_trajectory_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = loa(&["gen-data", "--count", "3", "--test-count", "2", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let problems = dir.path().join("problems.json");
    let weights = dir.path().join("w");
    let o = loa(&["train", "--problems", problems.to_str().unwrap(), "--epochs", "1", "--k", "10", "--out", weights.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let bench = dir.path().join("bench");
    let o = loa(&[
        "bench",
        "--problems",
        problems.to_str().unwrap(),
        "--algos",
        "bfgs,loa-bfgs",
        "--weights",
        weights.join("weights.json").to_str().unwrap(),
        "--k",
        "30",
        "--svg",
        "--out",
        bench.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_dir(bench.join("trajectories")).unwrap().count(), 6);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(bench.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 6);
    assert!(fs::read_to_string(fs::read_dir(bench.join("plots")).unwrap().next().unwrap().unwrap().path())
        .unwrap()
        .starts_with("<?xml"));

    let o = loa(&["report", "--input", bench.to_str().unwrap(), "--out", dir.path().join("r").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("r/report.md").exists());
}

#[test]
fn loa_bfgs_without_weights_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = loa(&["bench", "--algos", "loa-bfgs", "--k", "5", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 2);
}
