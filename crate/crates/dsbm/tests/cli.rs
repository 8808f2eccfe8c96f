//! End-to-end runs of the `dsbm` binary.

use std::path::Path;
use std::process::{Command, Output};

fn dsbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsbm")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = dsbm(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn sections(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut out: Vec<Vec<String>> = Vec::new();
    for line in text.lines().skip(1) {
        if line.starts_with('#') {
            out.push(Vec::new());
        } else {
            out.last_mut().unwrap().push(line.to_string());
        }
    }
    out
}

#[test]
fn generate_writes_one_section_per_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["generate", "--nodes", "100", "--steps", "40", "--xi", "0.5", "--eta", "0.75", "--out", out]);
    assert_eq!(sections(&dir.path().join("network.txt")).len(), 41);
    let planted = std::fs::read_to_string(dir.path().join("planted.csv")).unwrap();
    assert_eq!(planted.lines().count(), 1 + 41 * 100);
    let params = std::fs::read_to_string(dir.path().join("params.txt")).unwrap();
    assert!(params.contains("link_persistence=0.5"));
}

#[test]
fn frozen_model_repeats_the_first_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["generate", "--nodes", "80", "--steps", "5", "--xi", "1", "--eta", "1", "--seed", "4", "--out", out]);
    let s = sections(&dir.path().join("network.txt"));
    assert!(!s[0].is_empty());
    assert!(s.iter().all(|x| *x == s[0]));
}

#[test]
fn zero_steps_gives_a_single_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["generate", "--nodes", "50", "--steps", "0", "--out", out]);
    assert_eq!(sections(&dir.path().join("network.txt")).len(), 1);
}

#[test]
fn lsd_on_memoryless_links_finds_no_lag() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let res = dir.path().join("res");
    ok(&["generate", "--nodes", "200", "--steps", "10", "--xi", "0", "--eta", "0.8", "--seed", "2", "--out", data.to_str().unwrap()]);
    ok(&[
        "infer",
        "--input",
        data.join("network.txt").to_str().unwrap(),
        "--planted",
        data.join("planted.csv").to_str().unwrap(),
        "--out",
        res.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(res.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["tau_star_hat"], 0);
    assert!(summary["mean_overlap_corrected"].as_f64().unwrap() > 0.5);
    let snapshots = std::fs::read_to_string(res.join("snapshots.csv")).unwrap();
    assert!(snapshots.starts_with("t,a_star,converged,overlap_raw,overlap_corrected"));
    assert_eq!(snapshots.lines().count(), 12);
    assert!(res.join("corrected.csv").exists());
}

#[test]
fn static_inference_writes_assignments() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let res = dir.path().join("res");
    ok(&["generate", "--nodes", "150", "--steps", "2", "--seed", "5", "--out", data.to_str().unwrap()]);
    ok(&["infer", "--mode", "static", "--input", data.join("network.txt").to_str().unwrap(), "--out", res.to_str().unwrap()]);
    let assignments = std::fs::read_to_string(res.join("assignments.csv")).unwrap();
    assert_eq!(assignments.lines().count(), 1 + 3 * 150);
    let scored = ok(&[
        "score",
        "--planted",
        data.join("planted.csv").to_str().unwrap(),
        "--inferred",
        res.join("assignments.csv").to_str().unwrap(),
    ]);
    assert!(scored.starts_with("t,overlap"));
    assert!(scored.contains("# mean_overlap="));
}

#[test]
fn theory_reports_a_positive_lag() {
    let text = ok(&["theory", "--xi", "0.7", "--eta", "0.75", "--t", "inf"]);
    let tau: usize = text
        .lines()
        .find_map(|l| l.strip_prefix("# tau_star="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(tau >= 1);
    assert!(text.contains("\ntau,value\n"));
}

#[test]
fn phase_diagram_contains_the_static_line() {
    let text = ok(&["theory", "--phase-diagram", "--grid", "5"]);
    assert!(text.starts_with("xi,eta,static,single_snapshot,lag_corrected"));
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(2).unwrap().starts_with("0.3162")));
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn experiment_and_replay_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "experiment", "--recipe", "ahat-vs-xi", "--out", out, "--xi", "0.2,0.6", "--t", "3", "--steps", "4",
        "--nodes", "100", "--replications", "2", "--workers", "2",
    ]);
    let replay = ok(&["experiment", "--replay", dir.path().join("runs.jsonl").to_str().unwrap()]);
    assert!(replay.contains("replayed 4 runs, 0 mismatches"));
}

#[test]
fn exit_codes_separate_validation_from_runtime_errors() {
    assert_eq!(dsbm(&["generate", "--nodes", "10"]).status.code(), Some(1));
    assert_eq!(dsbm(&["generate", "--nodes", "10", "--steps", "2", "--xi", "1.5", "--out", "/tmp/x"]).status.code(), Some(1));
    assert_eq!(dsbm(&["theory", "--t", "soon"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "not a network\n").unwrap();
    assert_eq!(dsbm(&["infer", "--input", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]).status.code(), Some(1));
    let missing = dir.path().join("missing.txt");
    assert_eq!(dsbm(&["infer", "--input", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(dsbm(&["--help"]).status.code(), Some(0));
}
