use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lacuna(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lacuna"))
        .args(args)
        .current_dir(dir)
        .env_remove("LACUNA_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn qnorm_reports_value_and_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let out = lacuna(&["qnorm", "--a", "1,1,1,1", "--t", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["command"], "qnorm");
    assert_eq!(v["status"], "ok");
    let value = v["result"][0]["value"].as_f64().unwrap();
    assert!((value - 8f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["result"][0]["blocks"], serde_json::json!([[0, 1], [2, 3]]));
}

#[test]
fn kfunc_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = lacuna(&["kfunc", "--a", "3,2,1", "--t", "1", "--out", "r.json", "--csv", "r.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "kfunc");
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(csv.lines().count() >= 2);
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "vector,t,k,holmstedt");
    assert!(csv.contains(&14f64.sqrt().to_string()), "{csv}");
}

#[test]
fn extend_then_check_mult() {
    let dir = tempfile::tempdir().unwrap();
    let input = r#"[
        {"breakpoints": ["0", "1/2", "1"], "values": ["1", "-1"]},
        {"breakpoints": ["0", "9/32", "1/2", "23/32", "1"], "values": ["1", "-1", "1", "-1"]}
    ]"#;
    std::fs::write(dir.path().join("g.json"), input).unwrap();
    let out = lacuna(&["extend", "--input", "g.json", "--D", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("h.json").exists());
    let out = lacuna(&["check-mult", "h.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["ok"], true);
    assert_eq!(v["result"]["checked"], 3);

    let out = lacuna(&["check-mult", "g.json"], dir.path());
    assert_eq!(json(&out)["result"]["ok"], false);
}

#[test]
fn extend_rejects_failing_condition() {
    let dir = tempfile::tempdir().unwrap();
    let input = r#"[{"breakpoints": ["0", "1"], "values": ["1"]}]"#;
    std::fs::write(dir.path().join("g.json"), input).unwrap();
    let out = lacuna(&["extend", "--input", "g.json", "--D", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn kashin_success_and_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let out = lacuna(&["select-kashin", "--system", "walsh:256", "--s", "8"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["condition_sum"], "0");
    assert_eq!(v["result"]["indices"].as_array().unwrap().len(), 8);

    // three Walsh characters always include w1·w2 = w3
    let out = lacuna(&["select-kashin", "--system", "walsh:3", "--s", "3", "--budget", "50"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["status"], "not_found");
}

#[test]
fn greedy_horizon_exhausted_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = lacuna(
        &["select-greedy", "--system", "walsh:7", "--horizon", "7", "--eps-geometric", "4:0.03:0.25"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lacuna(&["qnorm", "--a", "1,x", "--t", "2"], dir.path()).status.code(), Some(1));
    assert_eq!(lacuna(&["no-such-command"], dir.path()).status.code(), Some(1));
    assert_eq!(lacuna(&["check-mult", "missing.json"], dir.path()).status.code(), Some(1));
    std::fs::write(dir.path().join("bad.json"), "[{\"breakpoints\": [0, 1],\n \"values\": }]").unwrap();
    let out = lacuna(&["check-mult", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json") && err.contains("line 2"), "{err}");
}

#[test]
fn seed_environment_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let run = |env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_lacuna"));
        cmd.args(["moment-band", "--system", "rademacher:6", "--family", "mixed:6:5", "--seed", "3"]);
        cmd.current_dir(dir.path()).env_remove("LACUNA_SEED");
        if let Some(s) = env {
            cmd.env("LACUNA_SEED", s);
        }
        json(&cmd.output().unwrap())
    };
    assert_eq!(run(None)["seed"], 3);
    assert_eq!(run(Some("17"))["seed"], 17);
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["select-kashin", "--system", "trig-cosine:1-64", "--s", "4", "--seed", "5"];
    let a = lacuna(&args, dir.path());
    let b = lacuna(&args, dir.path());
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(a.stdout, b.stdout);
}
