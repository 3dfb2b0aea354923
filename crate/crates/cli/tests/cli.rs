use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn divkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divkit")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn list_prints_the_registry() {
    let out = divkit(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in divkit::experiments::REGISTRY {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn unknown_experiment_is_a_usage_error() {
    let out = divkit(&["run", "div9-nowhere"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown experiment"));
}

#[test]
fn run_writes_artifacts_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = divkit(&["run", "leaf-separation", "--seed", "3", "--out", path(dir)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let csv_a = fs::read(a.join("leaf_separation_pairs.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("leaf_separation_pairs.csv")).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.starts_with("pair,dist,leaf_separation\n"));
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), 1001);

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "leaf-separation");
    assert_eq!(summary["pass_count"], 1);
    assert_eq!(summary["fail_count"], 0);
    assert!(summary["wall_time"].as_f64().unwrap() >= 0.0);

    let other = tmp.path().join("c");
    divkit(&["run", "leaf-separation", "--seed", "4", "--out", path(&other)]);
    assert_ne!(fs::read(other.join("leaf_separation_pairs.csv")).unwrap(), fs::read(a.join("leaf_separation_pairs.csv")).unwrap());
}

#[test]
fn verify_rechecks_stored_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = divkit(&["run", "div0-hyperbolic", "--radii", "1,2,3,4", "--out", path(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = dir.join("div0_hyperbolic.json");
    assert!(divkit(&["verify", path(&report)]).status.success());

    // a tampered series no longer reproduces the stored fit
    let csv = dir.join("div0_hyperbolic.csv");
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[2] = "2.0,99.0,true,0".to_string();
    fs::write(&csv, lines.join("\n") + "\n").unwrap();
    let out = divkit(&["verify", path(&report)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));

    // a tampered verdict is caught too
    let json = fs::read_to_string(dir.join("circumference.json")).unwrap();
    let forged = json.replacen("\"bound\": 0.01", "\"bound\": 0.0", 1);
    assert_ne!(json, forged);
    fs::write(dir.join("circumference.json"), forged).unwrap();
    assert_eq!(divkit(&["verify", path(&dir.join("circumference.json"))]).status.code(), Some(1));
}

#[test]
fn config_file_sets_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"params": {"samples": 12, "rng_seed": 5}}"#).unwrap();
    let out_dir = tmp.path().join("out");
    let out = divkit(&["run", "perturb-suite", "--config", path(&cfg), "--out", path(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(out_dir.join("perturb_loops.csv")).unwrap();
    assert_eq!(text.lines().count(), 13);

    fs::write(&cfg, r#"{"params": {"sample_count": 12}}"#).unwrap();
    assert!(!divkit(&["run", "perturb-suite", "--config", path(&cfg), "--out", path(&out_dir)]).status.success());
}

#[test]
fn failing_assertions_give_nonzero_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    // one descent sweep on the unrefined cone cannot get near the half circle
    fs::write(&cfg, r#"{"params": {"max_iters": 1, "refine_rounds": 0}}"#).unwrap();
    let out = divkit(&["run", "div0-hyperbolic", "--config", path(&cfg), "--out", path(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL div0_hyperbolic/"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["fail_count"].as_u64().unwrap() > 0);
}

#[test]
fn thread_cap_is_read_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_divkit"))
            .args(["run", "embedding-check", "--out", path(tmp.path())])
            .env("DIVKIT_THREADS", threads)
            .output()
            .unwrap()
    };
    assert!(run("1").status.success());
    let bad = run("many");
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("DIVKIT_THREADS"));
}
