use std::process::{Command, Output};

use serde_json::Value;

fn cuspform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuspform")).args(args).output().unwrap()
}

fn lines(o: &Output) -> Vec<Value> {
    String::from_utf8(o.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn defect_runs_are_byte_identical() {
    let args = ["alpha", "defect", "--f", "linear:1", "--seed", "7", "--n", "40"];
    let (a, b) = (cuspform(&args), cuspform(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let rec = &lines(&a)[0];
    assert_eq!(rec["count"], 40);
    assert_eq!(rec["seed"], 7);
    let other = cuspform(&["alpha", "defect", "--f", "linear:1", "--seed", "8", "--n", "40"]);
    assert_ne!(lines(&other)[0]["argmax"], rec["argmax"]);
}

#[test]
fn keys_are_sorted() {
    let o = cuspform(&["cycles", "--m", "3"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let v: Value = serde_json::from_str(text.trim()).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(v["norm_a"], "11");
    assert!(text.find("\"boundary_a\"").unwrap() < text.find("\"norm_a\"").unwrap());
}

#[test]
fn exit_codes() {
    assert_eq!(cuspform(&["selfcheck"]).status.code(), Some(0));
    assert_eq!(cuspform(&["bogus"]).status.code(), Some(2));
    assert_eq!(cuspform(&["graph", "dist", "e@0:0"]).status.code(), Some(2));

    let bad = cuspform(&["graph", "dist", "e@0:0", "q@0:0"]);
    assert_eq!(bad.status.code(), Some(1));
    let rec = &lines(&bad)[0];
    assert_eq!(rec["ok"], false);
    assert_eq!(rec["error"]["kind"], "parse");

    let cap = cuspform(&["--set", "psi_power_cap=2", "alpha", "am", "--f", "linear:1", "--m", "3"]);
    assert_eq!(cap.status.code(), Some(1));
    assert_eq!(lines(&cap)[0]["error"]["kind"], "psi_power_cap");

    let rank = ["alpha", "rank", "--f", "powfloor:1/2", "--f", "powfloor:1/2", "--expect", "1"];
    assert_eq!(cuspform(&rank).status.code(), Some(0));
    let wrong = ["alpha", "rank", "--f", "powfloor:1/2", "--f", "powfloor:1/2", "--expect", "2"];
    assert_eq!(cuspform(&wrong).status.code(), Some(1));
}

#[test]
fn csv_and_config_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("am.csv");
    let o = cuspform(&["alpha", "am", "--f", "linear:1", "--m", "1,2", "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success());
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table, "m,value,expected_abs,ok\n1,2,2,true\n2,4,4,true\n");

    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# broken hyperbolization\nrho_b = 1 0 0 1\n").unwrap();
    let o = cuspform(&["--config", cfg.to_str().unwrap(), "selfcheck"]);
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(&cfg, "kappa = 5\nrng_seed = 3\n").unwrap();
    let with_file = cuspform(&["--config", cfg.to_str().unwrap(), "alpha", "defect", "--f", "linear:1", "--n", "10"]);
    let with_flag = cuspform(&["--kappa", "5", "--seed", "3", "alpha", "defect", "--f", "linear:1", "--n", "10"]);
    assert!(with_file.status.success());
    assert_eq!(with_file.stdout, with_flag.stdout);
}

#[test]
fn horoball_edge() {
    let o = cuspform(&["graph", "dist", "e@0:1", "ABabABab@0:1"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "{\"d\":1,\"u\":\"e@0:1\",\"v\":\"ABabABab@0:1\"}\n");
}
