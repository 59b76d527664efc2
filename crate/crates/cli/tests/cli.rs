//! Runs the binary end to end on files in a temporary directory.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use misspec::mdp::{random_mdp, random_reward};
use misspec::robustness::HypothesisSet;
use serde_json::Value;

fn misspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_misspec")).args(args).output().expect("binary runs")
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
    path
}

struct Fixture {
    _dir: tempfile::TempDir,
    env: PathBuf,
    r1: PathBuf,
    r2: PathBuf,
    hypotheses: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let mdp = random_mdp(4, 3, 2, 1.0).unwrap();
    let a = random_reward(1, 3, 2, 1.0);
    let b = random_reward(2, 3, 2, 1.0);
    let set = HypothesisSet::from_rewards(vec![a.clone(), &a * 2.0, b.clone(), -&b]).unwrap();
    Fixture {
        env: write_json(dir.path(), "env.json", &mdp),
        r1: write_json(dir.path(), "first.json", &a),
        r2: write_json(dir.path(), "second.json", &(&a * 3.0)),
        hypotheses: write_json(dir.path(), "set.json", &set),
        _dir: dir,
    }
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn starc_reports_pairwise_distance() {
    let fx = fixture();
    let report = stdout_json(&misspec(&["starc", "--env", fx.env.to_str().unwrap(), "--rewards", fx.r1.to_str().unwrap(), fx.r2.to_str().unwrap()]));
    assert_eq!(report["schema"], "misspec-report/v1");
    assert_eq!(report["status"], "complete");
    let row = &report["rows"][0];
    assert_eq!(row["reward_1"], "first");
    assert_eq!(row["reward_2"], "second");
    assert!(row["distance"].as_f64().unwrap() < 1e-8);
}

#[test]
fn csv_output_to_file() {
    let fx = fixture();
    let out_path = fx._dir.path().join("out.csv");
    let out = misspec(&[
        "oracle",
        "same-order",
        "--env",
        fx.env.to_str().unwrap(),
        "--r1",
        fx.r1.to_str().unwrap(),
        "--r2",
        fx.r2.to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(out_path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("same_order"));
    assert!(lines.next().unwrap().contains("true"));
}

#[test]
fn models_and_robustness() {
    let fx = fixture();
    let env = fx.env.to_str().unwrap();
    let set = fx.hypotheses.to_str().unwrap();
    let report = stdout_json(&misspec(&["models", "eval", "--env", env, "--hypotheses", set, "--model", r#"{"kind":"mce","alpha":1}"#]));
    assert_eq!(report["rows"].as_array().unwrap().len(), 4);

    let boltz = r#"{"kind":"boltzmann","beta":1}"#;
    let out = misspec(&["robustness", "check", "--env", env, "--hypotheses", set, "--f", boltz, "--g", boltz, "--epsilon", "0.1"]);
    let report = stdout_json(&out);
    assert_eq!(report["results"]["verdict"]["robust"], false);
    // f = g always fails the last condition
    let conditions: Vec<u64> = report["results"]["verdict"]["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["condition"].as_u64().unwrap())
        .collect();
    assert!(conditions.iter().all(|&c| c == 4) && !conditions.is_empty());
}

#[test]
fn counterexamples_verify() {
    let report = stdout_json(&misspec(&["counterexample", "gamma", "--gamma1", "0.9", "--gamma2", "0.95"]));
    assert_eq!(report["rows"][0]["holds"], true);
    assert_eq!(report["results"]["check"]["reproducible"], true);

    let report = stdout_json(&misspec(&["counterexample", "tau", "--model", r#"{"kind":"mce","alpha":2}"#]));
    assert_eq!(report["rows"][0]["holds"], true);

    let report = stdout_json(&misspec(&["counterexample", "perturb", "--delta", "0.01", "--seed", "3"]));
    assert!(report["rows"][0]["policy_gap"].as_f64().unwrap() < 0.01);

    let report = stdout_json(&misspec(&["gridworld-demo", "--n", "3"]));
    assert_eq!(report["rows"][0]["holds"], true);
}

#[test]
fn exit_codes() {
    // bad input
    let out = misspec(&["starc", "--env", "/nonexistent.json", "--rewards", "/nonexistent.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("environment.path"));

    let out = misspec(&["counterexample", "tau", "--model", r#"{"kind":"boltzmann"}"#]);
    assert_eq!(out.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(dir.path(), "cfg.json", &serde_json::json!({"kind": "gridworld-demo", "tolerances": {"eta": -1}}));
    let out = misspec(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tolerances.eta"));

    // a precondition failure inside the pipeline
    let out = misspec(&["counterexample", "gamma", "--gamma1", "0.9", "--gamma2", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["status"], "failed");
}

#[test]
fn run_accepts_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(
        dir.path(),
        "cfg.json",
        &serde_json::json!({
            "kind": "starc-distance",
            "environment": {"kind": "random", "seed": 1, "n_states": 4, "n_actions": 2},
            "rewards": {"kind": "random", "count": 10, "seed": 5},
            "format": "csv"
        }),
    );
    let out = misspec(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    // header plus 45 pairs
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 46);
}

#[test]
fn list_names_experiments() {
    let out = misspec(&["list"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("counterexample-perturb"));
}
