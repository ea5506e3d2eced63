use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn numvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_numvar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("numvar-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const CONFIG: &str = "sequence = poly:0,0,1\nalphas = random:4\nn_grid = 20, 80\ns_grid = 1/2, 2^-4\nseed = 9\n";

#[test]
fn scan_streams_csv_and_is_reproducible() {
    let dir = scratch("scan");
    let cfg = dir.join("grid.cfg");
    std::fs::write(&cfg, CONFIG).unwrap();
    let cfg = cfg.to_str().unwrap();
    let first = numvar(&["scan", "--config", cfg]);
    assert!(first.status.success());
    let text = String::from_utf8(first.stdout.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,S_num,S_den,alpha_hex,V,ratio");
    assert_eq!(lines.len(), 1 + 2 * 2 * 4);
    assert!(lines[1].starts_with("20,1,2,"));
    assert!(lines[16].starts_with("80,1,16,"));
    let again = numvar(&["scan", "--config", cfg, "--threads", "1"]);
    assert_eq!(first.stdout, again.stdout);
    let reseeded = numvar(&["scan", "--config", cfg, "--seed", "10"]);
    assert_ne!(first.stdout, reseeded.stdout);

    let out = dir.join("scan.json");
    let json = numvar(&["scan", "--config", cfg, "--format", "json", "--out", out.to_str().unwrap()]);
    assert!(json.status.success());
    let parsed: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(parsed["rows"].as_array().unwrap().len(), 16);
    assert_eq!(parsed["metadata"]["config_hash"].as_str().unwrap().len(), 64);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn scan_budget_exit_codes() {
    let dir = scratch("budget");
    let cfg = dir.join("grid.cfg");
    std::fs::write(&cfg, CONFIG).unwrap();
    let cfg = cfg.to_str().unwrap();
    let fail = numvar(&["scan", "--config", cfg, "--budget-pairs", "500"]);
    assert_eq!(fail.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&fail.stderr).contains("N = 80"));
    let skip = numvar(&["scan", "--config", cfg, "--budget-pairs", "500", "--skip-over-budget"]);
    assert!(skip.status.success());
    assert!(String::from_utf8_lossy(&skip.stderr).contains("skipped N = 80"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn config_errors_exit_two() {
    let dir = scratch("config");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, CONFIG.replace("seed = 9\n", "")).unwrap();
    assert_eq!(numvar(&["scan", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(numvar(&["scan"]).status.code(), Some(2));
    assert_eq!(numvar(&["decompose", "--s", "1/3"]).status.code(), Some(2));
    assert_eq!(numvar(&["random-baseline", "--n", "10", "--s", "1/4"]).status.code(), Some(2));
    assert_eq!(numvar(&["preset", "nonexistent"]).status.code(), Some(2));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn decompose_lists_plateau_levels() {
    let v = json_of(&numvar(&["decompose", "--s", "15/64"]));
    let levels: Vec<(u64, String)> = v["levels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| (l["v"].as_u64().unwrap(), l["c"].as_str().unwrap().to_owned()))
        .collect();
    let expect: Vec<(u64, String)> = [(3, "0"), (4, "2"), (5, "6"), (6, "14")]
        .iter()
        .map(|&(v, c)| (v, c.to_owned()))
        .collect();
    assert_eq!(levels, expect);
    assert_eq!(v["scalar_identity"], true);
}

#[test]
fn arithmetic_subcommands_emit_exact_integers() {
    let e = json_of(&numvar(&["energy", "--sequence", "linear", "--n", "50"]));
    assert_eq!(e["additive_energy"], (50 * (2 * 50 * 50 + 1) / 3).to_string());
    assert_eq!(e["identity_holds"], true);

    let r = json_of(&numvar(&["repstats", "--sequence", "poly:0,0,1", "--n2", "30", "--limit", "3"]));
    assert_eq!(r["pairs"], "435");
    assert_eq!(r["top"].as_array().unwrap().len(), 3);

    let g = json_of(&numvar(&["gcdsum", "--sequence", "poly:0,0,1", "--n", "40", "--variant", "half"]));
    assert!(g["value"].as_f64().unwrap() > 0.0);
    let filtered = json_of(&numvar(&["gcdsum", "--sequence", "poly:0,0,1", "--n", "40", "--filter", "10"]));
    assert_eq!(filtered["filter"], "10");

    let d = json_of(&numvar(&[
        "divcheck", "--sequence", "poly:0,1,0,1", "--n", "100", "--ell-max", "50", "--primes-to", "30",
    ]));
    assert_eq!(d["all_ok"], true);
    assert_eq!(d["checks"].as_array().unwrap().len(), 49);
    assert_eq!(d["congruences"].as_array().unwrap().len(), 10);
    assert_eq!(numvar(&["divcheck", "--sequence", "linear", "--n", "5"]).status.code(), Some(2));
}

#[test]
fn baseline_subcommands() {
    let r = json_of(&numvar(&["random-baseline", "--n", "200", "--s", "1/8", "--replicates", "20", "--seed", "4"]));
    assert_eq!(r["values"].as_array().unwrap().len(), 20);
    assert_eq!(r["expected"].as_f64().unwrap(), 200.0 * 0.125 * 0.875);

    let b = json_of(&numvar(&["bridge-sim", "--m", "64", "--s", "1/8", "--n", "10", "--paths", "50", "--seed", "4"]));
    assert_eq!(b["summary"]["count"], 50);
    let bad = numvar(&["bridge-sim", "--m", "4", "--s", "1/8", "--paths", "5", "--seed", "4"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("1/4"));

    let k = json_of(&numvar(&["kronecker", "--max-n", "1000", "--s-grid", "1/4,1/2"]));
    let recs = k["records"].as_array().unwrap();
    let ns: Vec<u64> = recs.iter().map(|r| r["n"].as_u64().unwrap()).collect();
    assert_eq!(&ns[ns.len() - 3..], [377, 610, 987]);
    assert!(recs.iter().all(|r| r["max_v"].as_f64().unwrap() <= 9.0));
}

#[test]
fn json_only_commands_reject_csv() {
    assert_eq!(numvar(&["decompose", "--s", "1/4", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn golden_preset_passes() {
    let out = numvar(&["preset", "prop1-golden"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().last().unwrap().contains("PASS"));
    assert!(text.lines().filter(|l| l.starts_with("PASS max V")).count() >= 20);
}
