//! End-to-end checks of the command-line surface: exit codes, emitted
//! file schemas, and the simulate -> classify round trip.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_selftrain"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn CLI");
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_lines(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout).lines().map(|s| s.to_string()).collect()
}

#[test]
fn simulate_then_classify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("sine_");
    let out = run_ok(&[
        "simulate",
        "--gen",
        "sine",
        "--l",
        "300",
        "--n",
        "8",
        "--seed",
        "5",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    let paths = stdout_lines(&out);
    assert_eq!(paths.len(), 2);
    let seed_csv = Path::new(&paths[0]);
    let pool_csv = Path::new(&paths[1]);
    assert!(seed_csv.exists() && pool_csv.exists());

    let trace_path = dir.path().join("trace.csv");
    let out = run_ok(&[
        "classify",
        "--seed-csv",
        seed_csv.to_str().unwrap(),
        "--pool-csv",
        pool_csv.to_str().unwrap(),
        "--pool-labeled",
        "--h",
        "0.2",
        "--variant",
        "batch",
        "--fallback",
        "nn",
        "--out",
        trace_path.to_str().unwrap(),
    ]);
    let paths = stdout_lines(&out);
    assert_eq!(paths[0], trace_path.to_str().unwrap());
    let trace = std::fs::read_to_string(&trace_path).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "pool_index,label,step,score_pos,score_tot,stalled"
    );
    let mut indices: Vec<usize> = lines
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    indices.sort_unstable();
    assert_eq!(indices, (0..300).collect::<Vec<_>>());

    // metrics sidecar exists because the pool carried ground truth
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&paths[1]).unwrap()).unwrap();
    let error = metrics["error"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&error));
}

#[test]
fn classify_rejects_empty_pool_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let seed_csv = dir.path().join("seed.csv");
    let pool_csv = dir.path().join("pool.csv");
    std::fs::write(&seed_csv, "0.0,0.0,1\n1.0,1.0,0\n").unwrap();
    std::fs::write(&pool_csv, "").unwrap();
    let out = bin()
        .args([
            "classify",
            "--seed-csv",
            seed_csv.to_str().unwrap(),
            "--pool-csv",
            pool_csv.to_str().unwrap(),
            "--h",
            "0.5",
            "--out",
            dir.path().join("trace.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("invalid input"), "stderr: {stderr}");
}

#[test]
fn unknown_flag_fails() {
    let out = bin().args(["bench", "--frobnicate"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn bayes_of_deterministic_labels_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("bayes.json");
    run_ok(&[
        "bayes",
        "--gen",
        "sine",
        "--m",
        "20000",
        "--seed",
        "1",
        "--out",
        json_path.to_str().unwrap(),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(v["bayes_error"].as_f64().unwrap(), 0.0);
    assert_eq!(v["m"].as_u64().unwrap(), 20000);
}

#[test]
fn bench_emits_summary_and_per_rep_files() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("bench_");
    let out = run_ok(&[
        "bench",
        "--gen",
        "sine",
        "--l",
        "200",
        "--n",
        "6",
        "--h",
        "0.2",
        "--reps",
        "4",
        "--k",
        "3",
        "--seed",
        "9",
        "--out",
        prefix.to_str().unwrap(),
        "--no-times",
    ]);
    let paths = stdout_lines(&out);
    assert_eq!(paths.len(), 3);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
    for key in ["min", "q1", "median", "mean", "q3", "max", "reps", "times_mean_s"] {
        assert!(summary.get(key).is_some(), "summary missing {key}");
    }
    assert_eq!(summary["reps"].as_u64().unwrap(), 4);
    let per_rep = std::fs::read_to_string(&paths[1]).unwrap();
    let lines: Vec<&str> = per_rep.lines().collect();
    assert_eq!(lines[0], "rep,seed,error,time_s,stalled_count");
    assert_eq!(lines.len(), 5);
    // --no-times zeroes the time column
    assert!(lines[1].contains(",0.000000,"));
    // repeat run is byte-identical
    let prefix2 = dir.path().join("again_");
    run_ok(&[
        "bench", "--gen", "sine", "--l", "200", "--n", "6", "--h", "0.2", "--reps", "4",
        "--k", "3", "--seed", "9", "--out", prefix2.to_str().unwrap(), "--no-times",
    ]);
    let again = std::fs::read_to_string(dir.path().join("again_per_rep.csv")).unwrap();
    assert_eq!(per_rep, again);
}

#[test]
fn classify_with_pruning_emits_the_index_map() {
    let dir = tempfile::tempdir().unwrap();
    let seed_csv = dir.path().join("seed.csv");
    let pool_csv = dir.path().join("pool.csv");
    std::fs::write(&seed_csv, "0.0,0.0,0\n4.0,4.0,1\n").unwrap();
    // two tight pairs plus one isolated point that pruning drops
    std::fs::write(&pool_csv, "0.1,0.0\n0.15,0.0\n4.1,4.0\n4.15,4.0\n2.0,2.0\n").unwrap();
    let trace_path = dir.path().join("trace.csv");
    run_ok(&[
        "classify",
        "--seed-csv",
        seed_csv.to_str().unwrap(),
        "--pool-csv",
        pool_csv.to_str().unwrap(),
        "--h",
        "0.5",
        "--prune",
        "0.2",
        "--out",
        trace_path.to_str().unwrap(),
    ]);
    let map = std::fs::read_to_string(dir.path().join("trace.csv.prune_map.csv")).unwrap();
    assert_eq!(map, "original_index,new_index\n0,0\n1,1\n2,2\n3,3\n");
    let trace = std::fs::read_to_string(&trace_path).unwrap();
    assert_eq!(trace.lines().count(), 5); // header + 4 kept points
}

#[test]
fn diagnose_reports_the_documented_fields() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("report.json");
    run_ok(&[
        "diagnose",
        "--gen",
        "truncgauss",
        "--case",
        "1",
        "--l",
        "800",
        "--h",
        "0.4",
        "--seed",
        "4",
        "--out",
        json_path.to_str().unwrap(),
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(v["delta"].as_f64().unwrap(), 0.8);
    assert!(v["seed_check"]["ok"].as_bool().unwrap());
    for section in ["covering_0", "covering_1"] {
        assert!(v[section].get("holds").is_some());
        assert!(v[section].get("worst_gap").is_some());
    }
    assert!(v["valley"].get("margin").is_some());
    assert!(v["boundary_audit"].get("first_bad_index").is_some());
    assert!(v["boundary_audit"].get("in_boundary").is_some());
}
