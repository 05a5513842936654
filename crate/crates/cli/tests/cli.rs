//! End-to-end tests of the `sparsemv` binary: exit codes, artifact
//! shapes, determinism, and flag/environment handling.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sample_prices() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample_prices.csv")
}

fn backtest_prices() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/backtest_prices.csv")
}

/// Runs the binary with a clean environment (no stray SPARSEMV_* vars).
fn run(args: &[&str], extra_env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sparsemv"));
    for key in [
        "SPARSEMV_CONFIG",
        "SPARSEMV_INPUT",
        "SPARSEMV_OUT",
        "SPARSEMV_SEED",
        "SPARSEMV_TOL",
    ] {
        cmd.env_remove(key);
    }
    for (key, value) in extra_env {
        cmd.env(key, value);
    }
    cmd.args(args).output().expect("binary should spawn")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no exit code (signal?)")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

#[test]
fn solve_on_bundled_sample_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = run(
        &[
            "solve",
            "--input",
            sample_prices().to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "0",
        ],
        &[],
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));

    let weights = std::fs::read_to_string(out.join("weights.csv")).unwrap();
    let lines: Vec<&str> = weights.lines().collect();
    assert_eq!(lines[0], "asset_id,weight");
    assert_eq!(lines.len(), 11, "header plus one row per asset");
    let magnitudes: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap().abs())
        .collect();
    for pair in magnitudes.windows(2) {
        assert!(
            pair[0] >= pair[1],
            "rows sorted by |weight|: {magnitudes:?}"
        );
    }

    let certificate: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("certificate.json")).unwrap())
            .unwrap();
    assert!(certificate["objective"].is_f64());
    assert!(certificate["certified_gap"].as_f64().unwrap() <= 1e-8);
    assert!(certificate["support_size"].as_u64().unwrap() <= 10);
    assert!(certificate["iterations"].as_u64().is_some());
    assert!(certificate["wall_time"].as_f64().unwrap() >= 0.0);
}

#[test]
fn out_of_range_quantile_exits_2_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "bad.json",
        r#"{"spec_version": "1", "calibration": {"p1": 1.3}}"#,
    );
    let output = run(
        &[
            "solve",
            "--config",
            config.to_str().unwrap(),
            "--input",
            sample_prices().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_code(&output), 2);
    assert!(
        stderr(&output).contains("p1"),
        "stderr: {}",
        stderr(&output)
    );
}

#[test]
fn unknown_config_key_exits_2_and_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "typo.json",
        r#"{"spec_version": "1", "slover": "fista"}"#,
    );
    let output = run(&["solve", "--config", config.to_str().unwrap()], &[]);
    assert_eq!(exit_code(&output), 2);
    assert!(
        stderr(&output).contains("slover"),
        "stderr: {}",
        stderr(&output)
    );
}

#[test]
fn non_positive_price_exits_3_and_names_cell() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(
        dir.path(),
        "bad_prices.csv",
        "date,AAA,BBB\n2024-01-02,100.0,50.0\n2024-01-03,-3.5,49.0\n",
    );
    let output = run(&["solve", "--input", input.to_str().unwrap()], &[]);
    assert_eq!(exit_code(&output), 3);
    let err = stderr(&output);
    assert!(err.contains("2024-01-03"), "stderr: {err}");
    assert!(err.contains("AAA"), "stderr: {err}");
}

#[test]
fn train_window_longer_than_dataset_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "long.json",
        r#"{"spec_version": "1", "backtest": {"train_periods": 10000}}"#,
    );
    let output = run(
        &[
            "backtest",
            "--config",
            config.to_str().unwrap(),
            "--input",
            backtest_prices().to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_code(&output), 3);
    assert!(
        stderr(&output).contains("10001"),
        "stderr: {}",
        stderr(&output)
    );
}

#[test]
fn exhausted_iteration_budget_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "tiny.json",
        r#"{"spec_version": "1", "solver_options": {"max_inner": 2, "tol": 1e-15}}"#,
    );
    let output = run(
        &[
            "solve",
            "--config",
            config.to_str().unwrap(),
            "--input",
            sample_prices().to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_code(&output), 4);
    assert!(
        stderr(&output).contains("2 iterations"),
        "stderr: {}",
        stderr(&output)
    );
}

#[test]
fn solve_reruns_are_byte_identical_modulo_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let output = run(
            &[
                "solve",
                "--input",
                sample_prices().to_str().unwrap(),
                "--out",
                dir.path().join(out).to_str().unwrap(),
                "--seed",
                "42",
            ],
            &[],
        );
        assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    }
    let weights_a = std::fs::read(dir.path().join("a/weights.csv")).unwrap();
    let weights_b = std::fs::read(dir.path().join("b/weights.csv")).unwrap();
    assert_eq!(weights_a, weights_b, "weights.csv must be byte-identical");

    let mut cert_a: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("a/certificate.json")).unwrap(),
    )
    .unwrap();
    let mut cert_b: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("b/certificate.json")).unwrap(),
    )
    .unwrap();
    cert_a.as_object_mut().unwrap().remove("wall_time");
    cert_b.as_object_mut().unwrap().remove("wall_time");
    assert_eq!(cert_a, cert_b, "certificates must agree except wall_time");
}

#[test]
fn backtest_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let output = run(
            &[
                "backtest",
                "--input",
                backtest_prices().to_str().unwrap(),
                "--out",
                dir.path().join(out).to_str().unwrap(),
                "--seed",
                "7",
            ],
            &[],
        );
        assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    }
    for name in ["report.json", "daily_returns.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} must be byte-identical");
    }
}

#[test]
fn backtest_on_bundled_data_has_two_windows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = run(
        &[
            "backtest",
            "--input",
            backtest_prices().to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["windows"], 2);
    assert_eq!(report["strategies"].as_array().unwrap().len(), 4);
    for strategy in report["strategies"].as_array().unwrap() {
        assert_eq!(strategy["daily_returns"].as_array().unwrap().len(), 126);
        assert!(strategy["sharpe"].as_f64().unwrap().is_finite());
    }
    let daily = std::fs::read_to_string(out.join("daily_returns.csv")).unwrap();
    assert_eq!(daily.lines().count(), 1 + 4 * 126);
}

#[test]
fn environment_variables_supply_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = run(
        &[
            "calibrate",
            "--input",
            sample_prices().to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[("SPARSEMV_SEED", "5")],
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let penalties: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("penalties.json")).unwrap())
            .unwrap();
    assert_eq!(penalties["seed"], 5, "env var seed should be used");
}

#[test]
fn returns_mode_solves_emitted_returns() {
    let dir = tempfile::tempdir().unwrap();
    // Emit a returns CSV through the library, then feed it back through
    // the binary in returns mode.
    let table = sparsemv_cli::ingest::read_price_table(&sample_prices()).unwrap();
    let returns = sparsemv_cli::ingest::compute_excess_returns(&table).unwrap();
    let input = dir.path().join("returns.csv");
    sparsemv_cli::ingest::write_returns(&input, &returns).unwrap();

    let config = write_file(
        dir.path(),
        "returns.json",
        r#"{"spec_version": "1", "input_kind": "returns"}"#,
    );
    let out = dir.path().join("out");
    let output = run(
        &[
            "solve",
            "--config",
            config.to_str().unwrap(),
            "--input",
            input.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let weights = std::fs::read_to_string(out.join("weights.csv")).unwrap();
    assert_eq!(weights.lines().count(), 11);
}

#[test]
fn bench_writes_rows_for_each_cell_and_solver() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "bench.json",
        r#"{"spec_version": "1",
            "bench": {"cells": [{"dimension": 15, "support": 5}],
                      "solvers": ["split_bregman", "fista"],
                      "tol": 1e-8}}"#,
    );
    let out = dir.path().join("out");
    let output = run(
        &[
            "bench",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let bench = std::fs::read_to_string(out.join("bench.csv")).unwrap();
    let lines: Vec<&str> = bench.lines().collect();
    assert_eq!(
        lines[0],
        "dimension,sparsity_achieved,solver,wall_time_sec,objective"
    );
    assert_eq!(lines.len(), 3, "two solvers on one cell");
    assert!(lines[1].starts_with("15,"));
}

#[test]
fn estimate_writes_full_covariance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = run(
        &[
            "estimate",
            "--input",
            sample_prices().to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr(&output));
    let estimates: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("estimates.json")).unwrap())
            .unwrap();
    assert_eq!(estimates["mu"].as_array().unwrap().len(), 10);
    let gamma = estimates["gamma"].as_array().unwrap();
    assert_eq!(gamma.len(), 10);
    assert_eq!(gamma[0].as_array().unwrap().len(), 10);
}

#[test]
fn unknown_flag_exits_2() {
    let output = run(&["solve", "--frobnicate"], &[]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn version_flag_exits_0() {
    let output = run(&["--version"], &[]);
    assert_eq!(exit_code(&output), 0);
}
