//! End-to-end runs of the `ccwlan` binary.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture;

fn ccwlan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccwlan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn solve_is_byte_reproducible_and_rerunnable() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture("two_helper_config.json");
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out in [&a, &b] {
        let run = ccwlan(&["solve", "--config", path(&config), "--out", path(out)]);
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    }
    let report = std::fs::read(a.join("report.json")).unwrap();
    assert_eq!(report, std::fs::read(b.join("report.json")).unwrap());
    for file in ["rates.csv", "cdf_solve.csv", "timing.json"] {
        assert!(a.join(file).exists(), "{file} missing");
    }

    let rerun = ccwlan(&["solve", "--config", path(&a.join("report.json")), "--out", path(&c)]);
    assert_eq!(code(&rerun), 0, "{}", String::from_utf8_lossy(&rerun.stderr));
    assert_eq!(report, std::fs::read(c.join("report.json")).unwrap());
}

#[test]
fn sweep_and_scheduler_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "sweep".to_string(),
            "--axis".into(),
            "U".into(),
            "--values".into(),
            "2,3".into(),
            "--seeds".into(),
            "2".into(),
            "--mode".into(),
            "rga".into(),
            "--v-limit".into(),
            "3".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let argv = args(out);
        let run = ccwlan(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    }
    assert_eq!(
        std::fs::read(a.join("report.json")).unwrap(),
        std::fs::read(b.join("report.json")).unwrap()
    );
    assert!(a.join("cdf_U2.csv").exists());
}

#[test]
fn scheduler_trace_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let config = fixture("starvation_config.json");
    let run = ccwlan(&["rga", "--config", path(&config), "--trace", path(&trace)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(&trace).unwrap();
    let events: Vec<serde_json::Value> =
        text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(events.iter().any(|e| e["event"] == "activate"));
    assert!(events.iter().any(|e| e["event"] == "finish"));
}

#[test]
fn topology_and_enumeration_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let topo = dir.path().join("topo.json");
    let run = ccwlan(&["gen-topology", "--rings", "2", "--seed", "4", "--out", path(&topo)]);
    assert_eq!(code(&run), 0);
    let t: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&topo).unwrap()).unwrap();
    assert_eq!(t["helpers"].as_array().unwrap().len(), 19);

    let run = ccwlan(&["enumerate", "--config", path(&fixture("two_helper_config.json")), "--enumeration", "full"]);
    assert_eq!(code(&run), 0);
    let csv = String::from_utf8(run.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("pattern,choice,u1,u2,u3,u4,u5"));
    assert_eq!(lines.count(), 12);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let topo = dir.path().join("far.json");
    std::fs::write(
        &topo,
        r#"{"helpers":[[0,0]],"users":[[0.5,0],[3,0]],"r_trans":1,"r_inter":1.2}"#,
    )
    .unwrap();

    // A user outside every transmission disk: infeasible, or a stalled scheduler.
    let infeasible = ccwlan(&["solve", "--fixture", path(&topo), "-L", "2", "-N", "2"]);
    assert_eq!(code(&infeasible), 2, "{}", String::from_utf8_lossy(&infeasible.stderr));
    let stalled = ccwlan(&["rga", "--fixture", path(&topo), "-L", "2", "-N", "2"]);
    assert_eq!(code(&stalled), 3, "{}", String::from_utf8_lossy(&stalled.stderr));
    let dropped = ccwlan(&["solve", "--fixture", path(&topo), "-L", "2", "-N", "2", "--drop-unserved"]);
    assert_eq!(code(&dropped), 0, "{}", String::from_utf8_lossy(&dropped.stderr));

    let over_budget = ccwlan(&[
        "solve",
        "--config",
        path(&fixture("two_helper_config.json")),
        "--budget",
        "1",
    ]);
    assert_eq!(code(&over_budget), 3);

    assert_eq!(code(&ccwlan(&["solve", "--no-such-flag"])), 1);
    assert_eq!(code(&ccwlan(&["solve", "--mode", "bogus"])), 1);
    assert_eq!(code(&ccwlan(&["solve", "--alpha", "-1"])), 1);
    assert_eq!(code(&ccwlan(&["--help"])), 0);
}
