use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn scarsim(args: &[&str]) -> Output {
    scarsim_env(args, &[])
}

fn scarsim_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scarsim"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_succeeds_and_bad_usage_exits_one() {
    assert_eq!(code(&scarsim(&["--help"])), 0);
    assert_eq!(code(&scarsim(&["frobnicate"])), 1);
    assert_eq!(code(&scarsim(&["spectrum"])), 1, "model is required");
    assert_eq!(code(&scarsim(&["spectrum", "--model", "heisenberg"])), 1);
}

#[test]
fn dynamics_without_initial_state_is_a_usage_error() {
    let out = scarsim(&["dynamics", "--model", "xy", "--L", "4"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("initial state"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, "{\n  \"model\": \"toy\",\n  \"gama\": 1.0\n}\n").unwrap();
    let out = scarsim(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let msg = stderr(&out);
    assert!(msg.contains("gama") && msg.contains("line 3"), "{msg}");
}

#[test]
fn non_positive_tolerance_is_rejected() {
    assert_eq!(code(&scarsim(&["spectrum", "--model", "toy", "--L", "4", "--tol", "0"])), 1);
}

#[test]
fn spectrum_sidecar_reports_dfs_count() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    let out = scarsim(&["spectrum", "--model", "toy", "--L", "4", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("re,im,dfs\n"));
    assert_eq!(text.lines().count(), 1 + 256);
    assert!(!text.contains('\r'));
    let meta = read_json(&dir.path().join("toy.json"));
    assert_eq!(meta["schema_version"], 1);
    assert_eq!(meta["result"]["dfs_count"], 25);
    assert_eq!(meta["result"]["predicted_dfs_count"], 25);
    assert_eq!(meta["model"]["model"], "toy");
    let flagged = text.lines().skip(1).filter(|l| l.ends_with(",1")).count();
    assert_eq!(flagged, 25);
}

#[test]
fn tight_tolerance_failure_exits_two() {
    // With a tolerance far below round-off, positive rounding in a DFS
    // eigenvalue counts as unphysical growth.
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tight.csv");
    let out = scarsim(&["spectrum", "--model", "toy", "--L", "4", "--tol", "1e-300", "--out", csv.to_str().unwrap()]);
    let meta = read_json(&dir.path().join("tight.json"));
    let max_real = meta["result"]["max_real"].as_f64().unwrap();
    assert_eq!(code(&out), if max_real > 1e-300 { 2 } else { 0 }, "{}", stderr(&out));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let csv = dir.path().join(format!("dyn{k}.csv"));
        let out = scarsim(&[
            "dynamics", "--model", "toy", "--L", "4", "--initial", "random_density", "--seed", "5", "--t-max", "1",
            "--out", csv.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        outputs.push(std::fs::read(&csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let meta = read_json(&dir.path().join("dyn0.json"));
    assert_eq!(meta["seeds"]["seed"], 5);
}

#[test]
fn trajectory_csv_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let csv = dir.path().join(format!("traj{threads}.csv"));
        let out = scarsim_env(
            &[
                "trajectories", "--model", "dw", "--L", "4", "--initial", "dw_mps_perturbed", "--n-traj", "24",
                "--t-max", "1", "--master-seed", "11", "--out", csv.to_str().unwrap(),
            ],
            &[("SCARSIM_THREADS", threads)],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        outputs.push(std::fs::read_to_string(&csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0].starts_with("t,mean_ladder_x,stderr_ladder_x\n"));
    let meta = read_json(&dir.path().join("traj1.json"));
    assert_eq!(meta["seeds"]["master_seed"], 11);
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"model": "xy", "L": 6, "initial": {"kind": "xy_product"}, "t_max": 0.5}"#).unwrap();
    let csv = dir.path().join("xy.csv");
    let out = scarsim(&["dynamics", "--config", cfg.to_str().unwrap(), "--L", "4", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let meta = read_json(&dir.path().join("xy.json"));
    assert_eq!(meta["model"]["len"], 4);
    assert_eq!(meta["config"]["t_max"], 0.5);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,loschmidt,sx2_density\n"));
}

#[test]
fn projectors_and_verify_pass_for_every_model() {
    for model in ["toy", "xy", "aklt", "dw"] {
        let out = scarsim(&["projectors", "--model", model, "--L", "4"]);
        assert_eq!(code(&out), 0, "{model}: {}", stderr(&out));
        let report: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(report["result"]["analytic_distance"].as_f64().unwrap() < 1e-10);
        let out = scarsim(&["verify", "--model", model, "--L", "4"]);
        assert_eq!(code(&out), 0, "{model}: {}", stderr(&out));
        let report: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report["result"]["passes"], true);
    }
}

#[test]
fn nh_spectrum_lists_real_axis_values() {
    let out = scarsim(&["nh-spectrum", "--model", "dw", "--L", "4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("re,im,real_axis\n"));
    assert_eq!(text.lines().count(), 1 + 16);
}
