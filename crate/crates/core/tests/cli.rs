use std::process::{Command, Output};

use serde_json::Value;

fn tfree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfree")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = tfree(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn plane_summary() {
    let v = json(&["plane", "--q", "2"]);
    assert_eq!(v["config"]["command"], "plane");
    assert_eq!(v["result"]["points"], 7);
    assert_eq!(v["result"]["lines"], 7);
    assert_eq!(v["result"]["axioms"], "ok");
    let v = json(&["plane", "--p", "3", "--r", "2"]);
    assert_eq!(v["result"]["points"], 91);
    assert_eq!(v["config"]["q"], 9);
}

#[test]
fn rejects_non_prime_power() {
    let out = tfree(&["plane", "--q", "6"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("q must be a prime power"));
}

#[test]
fn blocking_census_rows() {
    let v = json(&["census-blocking", "--q", "2"]);
    assert_eq!(v["result"]["rows"]["3"]["minimal"], 7);
    assert_eq!(v["result"]["rows"]["4"]["minimal"], 0);
    assert_eq!(v["config"]["k_max"], 4);
    let v = json(&["census-blocking", "--q", "4", "--kmax", "8"]);
    assert_eq!(v["result"]["rows"]["7"]["minimal"], 360);
    let out = tfree(&["census-blocking", "--q", "8"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget exceeded"));
}

#[test]
fn blocking_census_csv() {
    let out = tfree(&["census-blocking", "--q", "3", "--format", "csv"]);
    let s = String::from_utf8(out.stdout).unwrap();
    let mut lines = s.lines();
    assert!(lines.next().unwrap().starts_with("# config: "));
    assert_eq!(lines.next(), Some("q,k,blocking_count,minimal_count,method"));
    assert!(s.contains("3,4,13,13,exhaustive"));
}

#[test]
fn curve_census_exact() {
    let v = json(&["census-curves", "--q", "2", "--d", "2"]);
    assert_eq!(v["result"]["total"], 64);
    assert_eq!(v["result"]["transverse_free"]["count"], 8);
    assert_eq!(v["config"]["mode"], "exact");
}

#[test]
fn results_ignore_thread_count() {
    let run = |threads: &str, mode: &[&str]| {
        let mut args = vec!["--threads", threads, "census-curves", "--q", "2", "--d", "4"];
        args.extend_from_slice(mode);
        json(&args)["result"].clone()
    };
    assert_eq!(run("1", &[]), run("3", &[]));
    let mc = ["--mode", "monte-carlo", "--samples", "10000", "--seed", "9"];
    assert_eq!(run("1", &mc), run("2", &mc));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let p = path.to_str().unwrap();
    let args = ["--out", p, "census-curves", "--q", "3", "--d", "2", "--mode", "monte-carlo", "--samples", "5000"];
    assert!(tfree(&args).status.success());
    let first = std::fs::read(&path).unwrap();
    assert!(tfree(&args).status.success());
    assert_eq!(first, std::fs::read(&path).unwrap());
}

#[test]
fn bounds_report() {
    let v = json(&["bounds", "--q", "2"]);
    assert_eq!(v["result"]["theta"]["lower"]["exact"], "105/8192");
    assert_eq!(v["result"]["theta"]["upper"]["exact"], "7/512");
    let v = json(&["bounds", "--upto", "64"]);
    let all = v["result"].as_array().unwrap();
    assert_eq!(all.len(), 27);
    assert!(all.iter().all(|r| r["flagged"] == false));
    let q4 = all.iter().find(|r| r["q"] == 4).unwrap();
    assert_ne!(q4["omega"]["lower"]["exact"], q4["theta"]["lower"]["exact"]);
}

#[test]
fn verify_quick_reports_the_conflict() {
    let out = tfree(&["verify", "quick"]);
    let s = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(2), "{s}");
    assert!(!s.lines().any(|l| l.starts_with("FAIL")));
    assert!(s.lines().any(|l| l.starts_with("CONFLICT") && l.contains("q=3, k=6")));
}
