use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_bloc-infer");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Simulates a small table into `dir/sim` and returns the data path.
fn simulated(dir: &Path) -> PathBuf {
    let sim = dir.join("sim");
    ok(&[
        "simulate", "--k", "2", "--n", "24", "--q", "5", "--c", "300", "--delta", "0.05", "--seed", "3", "--out",
        p(&sim),
    ]);
    sim.join("data.csv")
}

fn infer(data: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![
        "infer",
        "--data",
        p(data),
        "--out",
        p(out),
        "--iterations",
        "120",
        "--burn-in",
        "40",
        "--thin",
        "4",
        "--draws",
        "5",
        "--seed",
        "9",
    ];
    args.extend_from_slice(extra);
    ok(&args);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files_in(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

#[test]
fn infer_writes_every_product() {
    let tmp = TempDir::new().unwrap();
    let data = simulated(tmp.path());
    let out = tmp.path().join("run");
    infer(&data, &out, &["--chains", "2"]);
    for f in [
        "manifest.txt",
        "chain_0.samples.jsonl",
        "chain_1.samples.jsonl",
        "posterior_k.csv",
        "k_occupancy.csv",
        "chain_diagnostics.csv",
        "convergence.csv",
        "analysis/cooccupancy.csv",
        "analysis/clustering.csv",
        "analysis/question_fit.csv",
        "analysis/question_summary.csv",
        "analysis/clr_distance.csv",
        "analysis/polarization.csv",
        "analysis/bloc_support.csv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    assert!(!out.join("FAILED").exists());
    assert_eq!(fs::read_dir(out.join("analysis/js")).unwrap().count(), 5);

    let samples = fs::read_to_string(out.join("chain_0.samples.jsonl")).unwrap();
    assert_eq!(samples.lines().count(), 20);
    for line in samples.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let k = v["k"].as_u64().unwrap() as usize;
        assert_eq!(v["eta"].as_array().unwrap().len(), k);
        assert_eq!(v["z"].as_array().unwrap().len(), 24);
    }

    let total: f64 = csv_rows(&out.join("posterior_k.csv"))
        .iter()
        .map(|r| r[1].parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);

    let cooc = csv_rows(&out.join("analysis/cooccupancy.csv"));
    assert_eq!(cooc.len(), 24);
    assert!(cooc.iter().all(|r| r.len() == 25));
}

#[test]
fn same_seed_gives_identical_samples() {
    let tmp = TempDir::new().unwrap();
    let data = simulated(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    infer(&data, &a, &[]);
    infer(&data, &b, &[]);
    for f in ["chain_0.samples.jsonl", "posterior_k.csv", "analysis/cooccupancy.csv", "analysis/question_fit.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn analyze_reproduces_infer_products() {
    let tmp = TempDir::new().unwrap();
    let data = simulated(tmp.path());
    let out = tmp.path().join("run");
    infer(&data, &out, &[]);
    let again = tmp.path().join("again");
    ok(&["analyze", "--samples", p(&out), "--data", p(&data), "--out", p(&again), "--draws", "5"]);
    let first = files_in(&out.join("analysis"));
    let second = files_in(&again);
    assert_eq!(first.len(), second.len());
    for (x, y) in first.iter().zip(&second) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn k_star_override_sets_bloc_count() {
    let tmp = TempDir::new().unwrap();
    let data = simulated(tmp.path());
    let out = tmp.path().join("run");
    infer(&data, &out, &[]);
    let dest = tmp.path().join("k4");
    ok(&[
        "analyze", "--samples", p(&out), "--data", p(&data), "--out", p(&dest), "--draws", "5", "--k-star", "4",
    ]);
    let rows = csv_rows(&dest.join("clustering.csv"));
    let labels: std::collections::BTreeSet<usize> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(labels, (1..=4).collect());
    assert!(rows.iter().all(|r| r.len() == 8));

    let too_many = run(&[
        "analyze", "--samples", p(&out), "--data", p(&data), "--out", p(&dest), "--k-star", "99",
    ]);
    assert_eq!(too_many.status.code(), Some(1));
}

#[test]
fn min_bloc_size_is_recorded_and_applied() {
    let tmp = TempDir::new().unwrap();
    let data = simulated(tmp.path());
    let out = tmp.path().join("run");
    infer(&data, &out, &["--min-bloc-size", "0"]);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.lines().any(|l| l == "min_bloc_size=0"));
    let raw = csv_rows(&out.join("posterior_k.csv"));
    let strict = tmp.path().join("strict");
    infer(&data, &strict, &["--min-bloc-size", "20"]);
    let filtered = csv_rows(&strict.join("posterior_k.csv"));
    let max_k = |rows: &[Vec<String>]| rows.iter().map(|r| r[0].parse::<usize>().unwrap()).max().unwrap();
    assert!(max_k(&filtered) <= 1);
    assert!(max_k(&raw) >= max_k(&filtered));
}

#[test]
fn analyze_rejects_mismatched_data() {
    let tmp = TempDir::new().unwrap();
    let data = simulated(tmp.path());
    let out = tmp.path().join("run");
    infer(&data, &out, &[]);
    let altered = tmp.path().join("altered.csv");
    let mut text = fs::read_to_string(&data).unwrap();
    text.push('\n');
    fs::write(&altered, text).unwrap();
    let dest = tmp.path().join("never");
    let res = run(&["analyze", "--samples", p(&out), "--data", p(&altered), "--out", p(&dest)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!dest.exists());
}

#[test]
fn simulate_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let a = simulated(&tmp.path().join("a"));
    let b = simulated(&tmp.path().join("b"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let sim = a.parent().unwrap();
    let lambda = csv_rows(&sim.join("truth_lambda.csv"));
    assert_eq!(lambda.len(), 24);
    for row in &lambda {
        let s: f64 = row[1..].iter().map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-9);
    }
    assert_eq!(csv_rows(&sim.join("truth_alpha.csv")).len(), 10);
    assert_eq!(csv_rows(&a).len(), 24 * 5);
}

#[test]
fn recover_writes_one_row_per_replicate() {
    let tmp = TempDir::new().unwrap();
    let grid = tmp.path().join("grid.csv");
    fs::write(&grid, "k,n,q,c,delta\n2,20,4,200,0.05\n2,20,4,200,1.0\n").unwrap();
    let out = tmp.path().join("rec");
    ok(&[
        "recover", "--grid", p(&grid), "--replicates", "2", "--out", p(&out), "--iterations", "60", "--burn-in",
        "20", "--thin", "4",
    ]);
    assert_eq!(csv_rows(&out.join("recovery.csv")).len(), 4);
    let summary = csv_rows(&out.join("recovery_summary.csv"));
    assert_eq!(summary.len(), 2);
    assert!(summary.iter().all(|r| r[8] == "2"));
}

#[test]
fn bad_invocations_exit_with_usage_code() {
    assert_eq!(run(&["infer"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    let tmp = TempDir::new().unwrap();
    let data = simulated(tmp.path());
    let out = tmp.path().join("run");
    let bad_schedule = run(&["infer", "--data", p(&data), "--out", p(&out), "--schedule", "bogus"]);
    assert_eq!(bad_schedule.status.code(), Some(1));
    let short = run(&["infer", "--data", p(&data), "--out", p(&out), "--iterations", "10", "--burn-in", "10"]);
    assert_eq!(short.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_input_exits_with_data_code() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("dup.csv");
    fs::write(
        &data,
        "municipality_id,municipality_name,question_id,year,yes,no\n\
         m1,A,q1,2008,10,5\nm1,A,q1,2008,3,4\nm2,B,q1,2008,6,6\n",
    )
    .unwrap();
    let res = run(&["infer", "--data", p(&data), "--out", p(&tmp.path().join("o"))]);
    assert_eq!(res.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&res.stderr);
    assert!(msg.contains("rows"), "{msg}");
    let missing = run(&["infer", "--data", p(&tmp.path().join("absent.csv")), "--out", p(&tmp.path().join("o"))]);
    assert_ne!(missing.status.code(), Some(0));
}
