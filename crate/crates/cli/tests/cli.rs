use std::path::Path;
use std::process::{Command, Output};

fn seal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seal"))
        .args(args)
        .env_remove("SEAL_SEED")
        .output()
        .expect("seal binary runs")
}

const SMALL: &[&str] = &[
    "--synthetic", "60,3,12,0.15,0.02,0.4",
    "--test-size", "20", "--val-size", "10", "--per-class-init", "2",
    "--pretrain-epochs", "3", "--budget", "4", "--patience", "1",
    "--final-train-epochs", "20", "--delta", "0.9",
];

fn run_small(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run"];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", out.to_str().unwrap()]);
    seal(&args)
}

/// CSV rows with the `wall_seconds` column dropped.
fn without_timing(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let drop = r.headers().unwrap().iter().position(|h| h == "wall_seconds");
    r.records()
        .map(|rec| {
            rec.unwrap()
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != drop)
                .map(|(_, f)| f.to_string())
                .collect()
        })
        .collect()
}

#[test]
fn grid_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(dir.path(), &["--strategy", "seal,random", "--val-seeds", "1,2", "--init-seeds", "3,4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(without_timing(&dir.path().join("results.csv")).len(), 8);
    assert!(dir.path().join("summary.json").is_file());
}

#[test]
fn reruns_are_identical_across_job_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let common = ["--strategy", "seal,seal-ad,entropy", "--val-seeds", "1,2", "--init-seeds", "5", "--curve-interval", "2"];
    let mut one = common.to_vec();
    one.extend_from_slice(&["--jobs", "1"]);
    let mut two = common.to_vec();
    two.extend_from_slice(&["--jobs", "2"]);
    assert!(run_small(a.path(), &one).status.success());
    assert!(run_small(b.path(), &two).status.success());
    assert_eq!(
        without_timing(&a.path().join("results.csv")),
        without_timing(&b.path().join("results.csv"))
    );
    assert_eq!(
        std::fs::read(a.path().join("curves.csv")).unwrap(),
        std::fs::read(b.path().join("curves.csv")).unwrap()
    );
}

#[test]
fn curve_interval_controls_snapshot_count() {
    for (interval, per_run) in [("4", 2), ("1", 5)] {
        let dir = tempfile::tempdir().unwrap();
        let out = run_small(
            dir.path(),
            &["--strategy", "random", "--val-seeds", "1", "--init-seeds", "1,2", "--curve-interval", interval],
        );
        assert!(out.status.success());
        let rows = without_timing(&dir.path().join("curves.csv"));
        assert_eq!(rows.len(), 2 * per_run, "interval {interval}");
    }
}

#[test]
fn seed_env_var_drives_default_seed_lists() {
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let mut args = vec!["run"];
        args.extend_from_slice(SMALL);
        args.extend_from_slice(&["--strategy", "random", "--num-seeds", "2", "--out", dir.path().to_str().unwrap()]);
        let out = Command::new(env!("CARGO_BIN_EXE_seal")).args(&args).env("SEAL_SEED", seed).output().unwrap();
        assert!(out.status.success());
        without_timing(&dir.path().join("results.csv"))
    };
    let a = run("7");
    assert_eq!(a.len(), 4);
    assert_eq!(a, run("7"));
    assert_ne!(a, run("8"));
}

#[test]
fn missing_bundle_fails_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = seal(&["run", "--bundle", dir.path().join("nope").to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
    assert!(!out_dir.exists());
}

#[test]
fn unknown_strategy_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(dir.path(), &["--strategy", "seal-zz"]);
    assert!(!out.status.success());
}

#[test]
fn generated_bundle_is_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let out = seal(&["gen-synthetic", "--spec", "40,2,8,0.3,0.05,0.5", "--seed", "3", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let b = seal_core::graph_data::load_bundle(dir.path()).unwrap();
    assert_eq!((b.num_nodes(), b.num_classes(), b.num_features()), (40, 2, 8));
}

#[test]
fn gradient_check_command_passes() {
    let out = seal(&["check-gradients"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(String::from_utf8_lossy(&out.stdout).matches(" ok").count(), 7);
}
