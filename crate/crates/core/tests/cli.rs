use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"{
  "version": 1,
  "network": {"p": 0.4, "lambda": 10.0, "r1_m": 800.0, "r2_m": 400.0},
  "region": {"width_km": 4.0, "height_km": 4.0},
  "sim": {"burn_in": 100, "measure_steps": 50, "replications": 3},
  "degree": {"empirical_seeds": 2},
  "reconfig": {"t_r": 10, "horizon": 20, "target_nodes": 300.0,
               "scenario": [{"time": 10, "kind": "device_loss", "loss_fraction_type1": 0.5, "loss_fraction_type2": 0.5}]}
}"#;

fn netdesign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netdesign")).args(args).env("NETDESIGN_THREADS", "2").output().unwrap()
}

fn run_ok(args: &[&str]) {
    let out = netdesign(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap()).map(|e| (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())).collect();
    files.sort();
    files
}

fn small_config(dir: &TempDir) -> String {
    let path = dir.path().join("config.json");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_string()
}

const COMMANDS: [&[&str]; 5] = [&["degree"], &["equilibrium", "--trajectory"], &["simulate", "--timeseries"], &["design"], &["reconfig", "--replications", "2"]];

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(&tmp);
    for cmd in COMMANDS {
        let a = tmp.path().join(format!("{}-a", cmd[0]));
        let b = tmp.path().join(format!("{}-b", cmd[0]));
        for dir in [&a, &b] {
            let mut args = vec!["--config", &cfg, "--seed", "17", "--out", dir.to_str().unwrap()];
            args.extend_from_slice(cmd);
            run_ok(&args);
        }
        let (fa, fb) = (read_dir(&a), read_dir(&b));
        assert!(fa.iter().any(|(n, _)| n == &format!("{}_manifest.json", cmd[0])));
        assert_eq!(fa, fb, "{}", cmd[0]);
    }
}

#[test]
fn manifest_config_reproduces_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(&tmp);
    let first = tmp.path().join("first");
    run_ok(&["--config", &cfg, "--seed", "5", "--out", first.to_str().unwrap(), "simulate", "--lambda", "12"]);

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(first.join("simulate_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config"]["network"]["lambda"], 12.0);
    let replay = tmp.path().join("replay.json");
    fs::write(&replay, serde_json::to_string(&manifest["config"]).unwrap()).unwrap();

    let second = tmp.path().join("second");
    run_ok(&["--config", replay.to_str().unwrap(), "--out", second.to_str().unwrap(), "simulate"]);
    assert_eq!(fs::read(first.join("simulate.csv")).unwrap(), fs::read(second.join("simulate.csv")).unwrap());
}

#[test]
fn seed_changes_stochastic_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(&tmp);
    let read = |seed: &str| {
        let dir = tmp.path().join(seed);
        run_ok(&["--config", &cfg, "--seed", seed, "--out", dir.to_str().unwrap(), "simulate"]);
        fs::read(dir.join("simulate.csv")).unwrap()
    };
    assert_ne!(read("1"), read("2"));
}

#[test]
fn ranges_are_given_in_meters() {
    let tmp = TempDir::new().unwrap();
    run_ok(&["--out", tmp.path().to_str().unwrap(), "degree", "--lambda", "10", "--p", "1", "--r1-m", "300", "--r2-m", "300"]);
    let csv = fs::read_to_string(tmp.path().join("degree_moments.csv")).unwrap();
    let k2: Vec<&str> = csv.lines().find(|l| l.starts_with("k2,")).unwrap().split(',').collect();
    let mean: f64 = k2[1].parse().unwrap();
    assert!((mean - 10.0 * std::f64::consts::PI * 0.09).abs() < 1e-12);
}

#[test]
fn infeasible_sweep_rows_still_succeed() {
    let tmp = TempDir::new().unwrap();
    run_ok(&["--out", tmp.path().to_str().unwrap(), "design", "--mission", "encounter", "--sweep", "delta", "--grid", "0.2,0.9"]);
    let csv = fs::read_to_string(tmp.path().join("design_sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "value,status,p,lambda,r1_m,r2_m,cost,slack_combined,slack_layer1,slack_layer2");
    assert!(lines[1].starts_with("0.2,optimal,"));
    assert!(lines[2].starts_with("0.9,infeasible,"));
}

#[test]
fn equilibrium_bound_table() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("eq.json");
    fs::write(&cfg, r#"{"version": 1, "equilibrium": {"poisson_means": [3.14, 12.57], "alpha_grid": [0.3, 1.0]}}"#).unwrap();
    run_ok(&["--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(), "equilibrium"]);
    let csv = fs::read_to_string(tmp.path().join("equilibrium_bound.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    for line in csv.lines().skip(1) {
        let gap: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(gap >= -1e-9);
    }
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\n  \"version\": 1,\n  \"network\": {\"p\": }\n}").unwrap();
    let out = netdesign(&["--config", bad.to_str().unwrap(), "degree"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("bad.json:3:"), "{msg}");

    let unknown = tmp.path().join("unknown.json");
    fs::write(&unknown, r#"{"version": 1, "netwrok": {}}"#).unwrap();
    assert_eq!(netdesign(&["--config", unknown.to_str().unwrap(), "degree"]).status.code(), Some(2));

    let version = tmp.path().join("v9.json");
    fs::write(&version, r#"{"version": 9}"#).unwrap();
    assert_eq!(netdesign(&["--config", version.to_str().unwrap(), "degree"]).status.code(), Some(2));

    let out_dir = tmp.path().join("o");
    let out = out_dir.to_str().unwrap();
    assert_eq!(netdesign(&["--out", out, "degree", "--p", "1.5"]).status.code(), Some(2));
    assert_eq!(netdesign(&["--out", out, "degree", "--r1-m", "100", "--r2-m", "200"]).status.code(), Some(2));
    assert_eq!(netdesign(&["--out", out, "design", "--delta", "2"]).status.code(), Some(2));
    assert_eq!(netdesign(&["--out", out, "frobnicate"]).status.code(), Some(2));
    assert_eq!(netdesign(&["--out", out, "--config", "/nonexistent/cfg.json", "degree"]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    // An output path that is a regular file cannot be used as a directory.
    let file = tmp.path().join("occupied");
    fs::write(&file, "").unwrap();
    assert_eq!(netdesign(&["--out", file.to_str().unwrap(), "degree"]).status.code(), Some(1));
    // Infeasible initial design.
    let out = tmp.path().join("o");
    assert_eq!(netdesign(&["--out", out.to_str().unwrap(), "reconfig", "--mission", "encounter", "--delta", "0.9"]).status.code(), Some(1));
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(&tmp);
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let dir = tmp.path().join(threads);
        let out = Command::new(env!("CARGO_BIN_EXE_netdesign"))
            .args(["--config", &cfg, "--out", dir.to_str().unwrap(), "simulate"])
            .env("NETDESIGN_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        outputs.push(fs::read(dir.join("simulate.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(netdesign(&["--threads", "0", "degree"]).status.code(), Some(2));
}
