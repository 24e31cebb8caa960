use std::process::{Command, Output};

use serde_json::Value;

fn mom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mom")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn exact_reports_anchor_value() {
    let v = json(&mom(&["exact", "--group", "so", "--n", "3", "--k", "1", "--beta", "1"]));
    assert_eq!(v["command"], "exact");
    assert_eq!(v["config"]["n"], 3);
    assert!((v["values"][0]["value"].as_f64().unwrap() - 8.0).abs() < 1e-9);
}

#[test]
fn exact_csv_has_stable_header() {
    let out = mom(&["exact", "--group", "so", "--n-range", "1:3", "--k", "1", "--beta", "1", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,value"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 3);
    for (n, v) in values.iter().enumerate() {
        assert!((v - 2.0 * (n as f64 + 2.0)).abs() < 1e-9);
    }
}

#[test]
fn monte_carlo_is_reproducible() {
    let args = ["mc", "--group", "sp", "--n", "2", "--k", "1", "--beta", "1", "--samples", "2000"];
    let a = mom(&args);
    let b = mom(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut seeded = args.to_vec();
    seeded.extend(["--seed", "5"]);
    assert_ne!(mom(&seeded).stdout, a.stdout);
    let v = json(&a);
    assert_eq!(v["config"]["seed"], 20_240_601);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "3"]);
    let t = json(&mom(&threaded));
    assert_eq!(t["mean"], v["mean"]);
}

#[test]
fn fit_recovers_leading_coefficient() {
    let v = json(&mom(&["fit", "--group", "sp", "--k", "1", "--beta", "1", "--n-range", "1:4"]));
    assert_eq!(v["degree"], 2);
    assert!((v["leading"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn gamma_matches_known_value() {
    let v = json(&mom(&["gamma", "--group", "so", "--k", "2", "--beta", "1"]));
    assert!((v["gamma"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn predict_writes_sorted_ap_cache() {
    let dir = std::env::temp_dir().join(format!("mom-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cache = dir.join("ap.txt");
    let path = cache.to_str().unwrap();
    let args = ["predict", "--family", "elliptic", "--k", "1", "--beta", "2", "--d", "10000", "--cutoff", "1000", "--ap-cache", path];
    let first = json(&mom(&args));
    let text = std::fs::read_to_string(&cache).unwrap();
    let rows: Vec<(u64, i64)> = text
        .lines()
        .map(|l| {
            let mut it = l.split_whitespace();
            (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
        })
        .collect();
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
    assert!(rows.contains(&(5, -2)));
    let again = json(&mom(&args));
    assert_eq!(first["value"], again["value"]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(mom(&["--help"]).status.code(), Some(0));
    assert_eq!(mom(&["exact", "--group", "sp", "--k", "1"]).status.code(), Some(1));
    assert_eq!(mom(&["exact", "--group", "sp", "--n", "0", "--k", "1", "--beta", "1"]).status.code(), Some(1));
    assert_eq!(mom(&["gamma", "--group", "so", "--k", "1", "--beta", "1"]).status.code(), Some(1));
    assert_eq!(mom(&["exact", "--group", "sp", "--n", "1", "--k", "3", "--beta", "1"]).status.code(), Some(1));
    let out = mom(&["exact", "--group", "sp", "--n", "2", "--k", "1", "--beta", "1", "--output", "/nonexistent/dir/x.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "io");
    let out = mom(&["fit", "--group", "sp", "--k", "1", "--beta", "1", "--n-range", "1:5", "--degree", "1"]);
    assert_eq!(out.status.code(), Some(3));
}
