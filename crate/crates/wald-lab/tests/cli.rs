use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wald-lab")).args(args).output().expect("binary runs")
}

fn json_stdout(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.push("--json");
    let out = run(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_of(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).expect("machine-readable error")
}

const BASELINE: &str = "u_h = 1\nu_l = -1\ndbar_h = 0.7\ndbar_l = 0.7\ndund_h = 0.5\ndund_l = 0.5\na = 0.6\nb = 0.8\nc = 0.025\n";

#[test]
fn cutoffs_report_static_thresholds() {
    let v = json_stdout(&["cutoffs"]);
    assert_eq!(v["schema"], "wald-lab/1");
    assert_eq!(v["result"]["p_L"].as_f64().unwrap(), 0.5);
    assert_eq!(v["result"]["p_M"].as_f64().unwrap(), 0.75);
    assert_eq!(v["config"]["c"].as_f64().unwrap(), 0.025);
}

#[test]
fn config_file_is_loaded_and_bad_values_named() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("baseline.cfg");
    std::fs::write(&good, BASELINE).unwrap();
    let v = json_stdout(&["cutoffs", "--config", good.to_str().unwrap()]);
    assert_eq!(v["config"]["seed"], 42);
    assert_eq!(v["config"]["reps"], 100_000);

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, BASELINE.replace("c = 0.025", "c = -0.1")).unwrap();
    let e = error_of(&run(&["cutoffs", "--config", bad.to_str().unwrap()]));
    assert_eq!(e["error"], "ConfigError");
    assert!(e["message"].as_str().unwrap().starts_with("c:"), "{e}");
}

#[test]
fn random_stopping_from_time_zero_above_cutoff_fails() {
    let out = run(&["solve", "--regime", "random-stopping", "--that", "0", "--p0", "0.7"]);
    assert_eq!(error_of(&out)["error"], "NoRandomization");
}

#[test]
fn unknown_command_fails_cleanly() {
    assert_eq!(error_of(&run(&["frobnicate"]))["error"], "UnknownCommand");
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = |d: &Path| {
        run(&["simulate", "--p0", "0.6", "--reps", "5000", "--seed", "9", "--out", d.to_str().unwrap()]).status.success()
    };
    assert!(args(d1.path()) && args(d2.path()));
    // the output directory is part of the embedded config, so compare results
    let j = |d: &Path| serde_json::from_str::<Value>(&read(d, "simulate.json")).unwrap()["result"].to_string();
    assert_eq!(j(d1.path()), j(d2.path()));
    assert_eq!(read(d1.path(), "simulation_cdf.csv"), read(d2.path(), "simulation_cdf.csv"));
    let a = run(&["simulate", "--p0", "0.6", "--reps", "5000", "--json"]);
    let b = run(&["simulate", "--p0", "0.6", "--reps", "5000", "--json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn artifacts_have_headers_and_exact_floats() {
    let d = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--p0", "0.6", "--regime", "random-stopping", "--out", d.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(d.path(), "strategy_path.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,rho,F_H,F_L"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 4);
    assert!(first[0].contains('e') && first[0].split('e').next().unwrap().len() == 18, "{}", first[0]);
    let doc: Value = serde_json::from_str(&read(d.path(), "solve.json")).unwrap();
    assert_eq!(doc["result"]["regime"], "random-stopping");
}

#[test]
fn two_period_writes_one_table_per_opponent() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(&["two-period", "--out", d.path().to_str().unwrap()]).status.success());
    for o in ["S0", "R0", "Learn"] {
        assert!(read(d.path(), &format!("two_period_{o}.csv")).starts_with("p0,pay_R0,pay_S0,pay_learn\n"));
    }
    let v = json_stdout(&["two-period", "--opponent", "learn", "--p0", "0.5"]);
    let row = &v["result"]["opponents"][0];
    assert!((row["payoffs"]["pay_learn"].as_f64().unwrap() - 0.137).abs() < 1e-12);
}

#[test]
fn sweep_concatenates_rows_and_keeps_errors() {
    let v = json_stdout(&["sweep", "--key", "p0", "--values", "0.01,0.6,0.9", "--inner", "classify"]);
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["result"]["regimes"][0], "immediate-s");
    assert_eq!(rows[2]["result"]["regimes"][0], "immediate-r");
    let v = json_stdout(&["sweep", "--key", "c", "--values", "0.01,5", "--inner", "cutoffs"]);
    let rows = v["result"]["rows"].as_array().unwrap();
    assert!(rows[0]["result"]["p_tilde"].is_f64());
    assert!(rows[1]["error"].is_string() && rows[1].get("result").is_none());
}

#[test]
fn extensions_cover_each_kind() {
    let q = ["--set", "dbar_h=0.2", "--set", "dbar_l=0.2", "--set", "dund_h=0.1", "--set", "dund_l=0.1", "--set", "c=0.01"];
    let mut args = vec!["extensions", "--kind", "mrss", "--p0", "0.6"];
    args.extend(q);
    let v = json_stdout(&args);
    assert!(v["result"]["t_star"].as_f64().unwrap() > 0.0);
    let v = json_stdout(&["extensions", "--kind", "nplayer", "--set", "n=3", "--p0", "0.3"]);
    assert_eq!(v["result"]["cutoffs"].as_array().unwrap().len(), 2);
    let intense = ["extensions", "--kind", "competition", "--set", "dbar_h=1.2", "--set", "dbar_l=1.2", "--set", "dund_h=1", "--set", "dund_l=1", "--p0", "0.3"];
    let v = json_stdout(&intense);
    assert!(v["result"]["t_ps"].as_f64().unwrap() > 0.0);
}
