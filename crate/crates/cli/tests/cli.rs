//! End-to-end runs through the runner and the installed binary.

use lgsim_cli::config::ScenarioConfig;
use lgsim_cli::runner;
use serde_json::json;
use std::f64::consts::PI;
use std::fs;
use std::process::Command;

fn spin_config(out_dir: &std::path::Path, protocol: serde_json::Value) -> serde_json::Value {
    let tau_star = 2.0 * PI / 3.0;
    json!({
        "units": "omega_t",
        "system": {
            "dimension": 2,
            "hamiltonian": {"pauli": [0.5, 0.0, 0.0]},
            "q": {"pauli_direction": [0.0, 0.0, 1.0]},
            "initial_state": "up_z"
        },
        "times": {"t1": 0.0, "tau_grid": {"start": tau_star - 1.0, "stop": tau_star + 1.0, "points": 3}},
        "protocol": protocol,
        "seed": 11,
        "output": {"path": out_dir, "format": "both"}
    })
}

#[test]
fn sequential_scan_finds_the_known_violation() {
    let dir = tempfile::tempdir().unwrap();
    let config_value = spin_config(dir.path(), json!({"type": "sequential"}));
    let config = ScenarioConfig::from_json(&config_value.to_string()).unwrap();
    let outcome = runner::run(&config).unwrap();

    assert!((outcome.summary.max_violation - 0.5).abs() <= 1e-9);
    assert!((outcome.summary.argmax_tau.unwrap() - 2.0 * PI / 3.0).abs() <= 1e-12);

    let csv = fs::read_to_string(outcome.csv_path.unwrap()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "tau,C12,C23,C13,delta0,lower_margin,upper_margin,mod_lower_margin,mod_upper_margin,flag"
    );
    assert_eq!(lines.count(), 3);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outcome.json_path.unwrap()).unwrap()).unwrap();
    assert_eq!(summary["protocol"], "sequential");
    assert_eq!(summary["rows"], 3);
}

#[test]
fn quasi_scan_reproduces_sequential_correlators() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let seq = ScenarioConfig::from_json(
        &spin_config(dir_a.path(), json!({"type": "sequential"})).to_string(),
    )
    .unwrap();
    let quasi = ScenarioConfig::from_json(
        &spin_config(dir_b.path(), json!({"type": "quasi"})).to_string(),
    )
    .unwrap();
    let rows_a = runner::run(&seq).unwrap().rows;
    let rows_b = runner::run(&quasi).unwrap().rows;
    for (a, b) in rows_a.iter().zip(&rows_b) {
        assert!((a.c12 - b.c12).abs() <= 1e-10);
        assert!((a.c13 - b.c13).abs() <= 1e-10);
    }
}

#[test]
fn record_rows_flag_the_decoherence_condition() {
    let dir = tempfile::tempdir().unwrap();
    let mut config_value = spin_config(dir.path(), json!({"type": "record"}));
    config_value["system"]["initial_state"] = json!("plus_x");
    let config = ScenarioConfig::from_json(&config_value.to_string()).unwrap();
    let outcome = runner::run(&config).unwrap();
    for row in &outcome.rows {
        assert!(row.flag.contains("decoherence condition failed"), "{}", row.flag);
        assert!(row.c12.is_nan());
    }
    let csv = fs::read_to_string(outcome.csv_path.unwrap()).unwrap();
    assert!(csv.contains("decoherence condition failed"));
}

fn classical_config(out_dir: &std::path::Path, eta: f64, runs: u64) -> serde_json::Value {
    let tau_star = 2.0 * PI / 3.0;
    json!({
        "units": "omega_t",
        "times": {"t1": 0.0, "tau_grid": {"start": tau_star, "stop": tau_star, "points": 1}},
        "protocol": {"type": "classical", "model": {
            "dynamics": {"square_wave": {"omega": 1.0}},
            "kick": {"coupling_sign": "+", "strength": eta},
            "p_plus": 0.5
        }},
        "runs": runs,
        "seed": 99,
        "output": {"path": out_dir, "format": "both"}
    })
}

#[test]
fn classical_square_wave_stays_within_stderr_of_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let config =
        ScenarioConfig::from_json(&classical_config(dir.path(), 0.0, 20_000).to_string())
            .unwrap();
    let outcome = runner::run(&config).unwrap();
    let row = &outcome.rows[0];
    let se = row.stderr.unwrap();
    assert!(row.lower_margin >= -3.0 * se.margin, "lower {}", row.lower_margin);
    assert!(row.upper_margin >= -3.0 * se.margin, "upper {}", row.upper_margin);

    let csv = fs::read_to_string(outcome.csv_path.unwrap()).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.contains("C12_stderr"));
    assert!(header.ends_with(",flag"));
}

#[test]
fn reruns_reproduce_outputs_byte_for_byte() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let run = |dir: &std::path::Path| {
        let config =
            ScenarioConfig::from_json(&classical_config(dir, 0.4, 5_000).to_string()).unwrap();
        let outcome = runner::run(&config).unwrap();
        (
            fs::read(outcome.csv_path.unwrap()).unwrap(),
            fs::read(outcome.json_path.unwrap()).unwrap(),
        )
    };
    let (csv_a, json_a) = run(dir_a.path());
    let (csv_b, json_b) = run(dir_b.path());
    assert_eq!(csv_a, csv_b);
    assert_eq!(json_a, json_b);
}

#[test]
fn seed_override_changes_monte_carlo_counts() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let mut config_a =
        ScenarioConfig::from_json(&classical_config(dir_a.path(), 0.4, 5_000).to_string())
            .unwrap();
    config_a.seed = 1;
    let mut config_b =
        ScenarioConfig::from_json(&classical_config(dir_b.path(), 0.4, 5_000).to_string())
            .unwrap();
    config_b.seed = 2;
    let a = runner::run(&config_a).unwrap();
    let b = runner::run(&config_b).unwrap();
    assert_ne!(a.rows[0].c12, b.rows[0].c12);
}

#[test]
fn binary_runs_a_config_and_honors_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let config_path = dir.path().join("scenario.json");
    fs::write(
        &config_path,
        spin_config(&out, json!({"type": "ancilla_simple"})).to_string(),
    )
    .unwrap();

    let status = Command::new(env!("CARGO_BIN_EXE_lgsim"))
        .args(["run", config_path.to_str().unwrap(), "--format", "csv"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("report.csv").exists());
    assert!(!out.join("summary.json").exists());
}

#[test]
fn binary_exit_codes_distinguish_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    // Unreadable config path.
    let status = Command::new(env!("CARGO_BIN_EXE_lgsim"))
        .args(["run", dir.path().join("missing.json").to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // Structurally valid JSON that fails validation, naming the field.
    let config_path = dir.path().join("bad.json");
    fs::write(
        &config_path,
        json!({
            "times": {"t1": 0.0, "tau_grid": {"start": 0.1, "stop": 1.0, "points": 4}},
            "protocol": {"type": "sequential"}
        })
        .to_string(),
    )
    .unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_lgsim"))
        .args(["run", config_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("system"), "stderr: {stderr}");
}

#[test]
fn explicit_three_time_config_produces_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut config_value = spin_config(dir.path(), json!({"type": "sequential"}));
    config_value["times"] = json!({"t1": 0.0, "t2": 2.0 * PI / 3.0, "t3": 4.0 * PI / 3.0});
    let config = ScenarioConfig::from_json(&config_value.to_string()).unwrap();
    let outcome = runner::run(&config).unwrap();
    assert_eq!(outcome.rows.len(), 1);
    assert!((outcome.rows[0].c12 + 0.5).abs() <= 1e-12);
    assert!((outcome.summary.max_violation - 0.5).abs() <= 1e-12);
}
