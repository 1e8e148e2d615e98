use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fredom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fredom"))
        .args(args)
        .env_remove("FREDOM_SEED")
        .output()
        .expect("spawn fredom")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn simulate(dir: &Path, seed: &str) {
    ok(&fredom(&["simulate", "--experiment", "expA", "--seed", seed, "--output", dir.to_str().unwrap()]));
}

#[test]
fn simulate_writes_series_and_truth() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "7");
    let series = fs::read_to_string(tmp.path().join("series.csv")).unwrap();
    assert_eq!(series.lines().next().unwrap(), "X1,X2,X3,X4,X5");
    assert_eq!(series.lines().count(), 1001);
    let truth = fs::read_to_string(tmp.path().join("truth.json")).unwrap();
    assert!(truth.contains("\"edges\""));
}

#[test]
fn simulate_is_deterministic_and_seed_sensitive() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    simulate(a.path(), "11");
    simulate(b.path(), "11");
    simulate(c.path(), "12");
    let read = |d: &Path| fs::read(d.join("series.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert_ne!(read(a.path()), read(c.path()));
}

#[test]
fn seed_env_is_a_fallback() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    simulate(a.path(), "21");
    let out = Command::new(env!("CARGO_BIN_EXE_fredom"))
        .args(["simulate", "--experiment", "expA", "--output", b.path().to_str().unwrap()])
        .env("FREDOM_SEED", "21")
        .output()
        .unwrap();
    ok(&out);
    assert_eq!(fs::read(a.path().join("series.csv")).unwrap(), fs::read(b.path().join("series.csv")).unwrap());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "3");
    let input = tmp.path().join("series.csv");
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "method = tseqvar\nformat = csv\n").unwrap();
    let from_cfg = ok(&fredom(&["learn", "--config", cfg.to_str().unwrap(), "--input", input.to_str().unwrap()]));
    assert!(from_cfg.starts_with("X1,X2,X3,X4,X5\n"));
    let flagged =
        ok(&fredom(&["learn", "--config", cfg.to_str().unwrap(), "--format", "dot", "--input", input.to_str().unwrap()]));
    assert!(flagged.starts_with("digraph"));
}

#[test]
fn learn_then_metrics_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "4");
    let input = tmp.path().join("series.csv");
    let est = tmp.path().join("est.json");
    for method in ["fredom", "exfredom", "tseqvar"] {
        ok(&fredom(&[
            "learn",
            "--input",
            input.to_str().unwrap(),
            "--method",
            method,
            "--output",
            est.to_str().unwrap(),
        ]));
        let m = ok(&fredom(&[
            "metrics",
            "--estimate",
            est.to_str().unwrap(),
            "--truth",
            tmp.path().join("truth.json").to_str().unwrap(),
        ]));
        let mut lines = m.lines();
        assert_eq!(lines.next(), Some("shd,sid"));
        let vals: Vec<usize> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(vals.len(), 2);
    }
    // The truth against itself scores zero.
    let truth = tmp.path().join("truth.json");
    let m = ok(&fredom(&["metrics", "--estimate", truth.to_str().unwrap(), "--truth", truth.to_str().unwrap()]));
    assert_eq!(m, "shd,sid\n0,0\n");
}

#[test]
fn order_reports_a_permutation() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "8");
    let out = ok(&fredom(&["order", "--input", tmp.path().join("series.csv").to_str().unwrap(), "--m-blocks", "6"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let mut order: Vec<String> = v["order"].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect();
    order.sort();
    assert_eq!(order, ["X1", "X2", "X3", "X4", "X5"]);
    let support = v["support"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&support));
}

#[test]
fn learn_with_fixed_lambda_is_byte_stable() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), "9");
    let input = tmp.path().join("series.csv");
    let args = ["learn", "--input", input.to_str().unwrap(), "--lambda", "5.0", "--format", "json"];
    let a = ok(&fredom(&args));
    let b = ok(&fredom(&args));
    assert_eq!(a, b);
    assert!(a.contains("\"lambda\": 5.0"));
}

#[test]
fn experiment_reps1_twice_gives_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        ok(&fredom(&[
            "experiment",
            "--name",
            "exp1",
            "--reps",
            "1",
            "--seed",
            "42",
            "--jobs",
            "1",
            "--output",
            d.path().to_str().unwrap(),
        ]));
    }
    for f in ["replicates.csv", "summary.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let summary = fs::read_to_string(a.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("experiment,method,reps,shd_mean,shd_sd,shd_median,sid_mean,sid_sd,sid_median\n"));
    assert!(summary.contains("exp1,fredom,1,"));
}

#[test]
fn complex_input_is_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&fredom(&["simulate", "--experiment", "expC", "--dim", "4", "--length", "400", "--seed", "1", "--output", tmp.path().to_str().unwrap()]));
    let series = fs::read_to_string(tmp.path().join("series.csv")).unwrap();
    assert!(series.lines().next().unwrap().ends_with("_im"));
    let out = ok(&fredom(&[
        "learn",
        "--input",
        tmp.path().join("series.csv").to_str().unwrap(),
        "--kind",
        "complex",
        "--method",
        "exfredom",
        "--format",
        "csv",
    ]));
    assert_eq!(out.lines().count(), 5);
}

#[test]
fn errors_exit_nonzero_with_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "a,b\n1,2\nNaN,3\n").unwrap();
    let out = fredom(&["learn", "--input", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row") && err.contains('a'), "{err}");

    let out = fredom(&["learn", "--input", bad.to_str().unwrap(), "--method", "bogus"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown method"));

    let out = fredom(&["experiment", "--name", "exp9", "--output", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
}
