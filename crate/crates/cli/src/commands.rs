//! Subcommand implementations and the artifacts they write.
//!
//! Every command reads its input and options from a resolved
//! [`RunConfig`] and writes fixed-name artifacts into the output
//! directory:
//!
//! | command    | artifacts                         |
//! |------------|-----------------------------------|
//! | `solve`    | `weights.csv`, `certificate.json` |
//! | `backtest` | `report.json`, `daily_returns.csv`|
//! | `bench`    | `bench.csv`                       |
//! | `estimate` | `estimates.json`                  |
//! | `calibrate`| `penalties.json`                  |
//!
//! With a fixed seed, rerunning `solve` or `backtest` on the same input
//! reproduces every artifact byte for byte, except the `wall_time`
//! field of `certificate.json`, which reports the measured solve time.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sparsemv_core::backtest::{run_backtest, StrategyResult};
use sparsemv_core::calibration::calibrate;
use sparsemv_core::estimation::estimate;
use sparsemv_core::objective::Problem;
use sparsemv_core::solvers::{solve, solve_detailed};
use sparsemv_core::synthetic::planted_instance;
use sparsemv_core::ReturnMatrix;

use crate::config::{InputKind, RunConfig};
use crate::error::CliError;
use crate::ingest;

/// Optimality certificate written by `solve` alongside the weights.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    /// Objective value attained by the written weights.
    pub objective: f64,
    /// Certified bound on the distance to the optimal objective.
    pub certified_gap: Option<f64>,
    /// Number of nonzero weights.
    pub support_size: usize,
    /// Inner iterations the solver spent.
    pub iterations: usize,
    /// Wall-clock solve time in seconds (the one field that varies
    /// between reruns).
    pub wall_time: f64,
}

/// Loads the input CSV as an excess-return matrix, honoring the
/// configured input kind.
pub fn load_input(cfg: &RunConfig) -> Result<ReturnMatrix, CliError> {
    let path = cfg.input.as_deref().ok_or_else(|| {
        CliError::Config(
            "no input file given: pass --input FILE or set \"input\" in the config".into(),
        )
    })?;
    match cfg.input_kind {
        InputKind::Prices => {
            let table = ingest::read_price_table(path)?;
            ingest::compute_excess_returns(&table)
        }
        InputKind::Returns => ingest::read_returns(path),
    }
}

/// Estimates moments, calibrates penalties, solves one portfolio, and
/// writes `weights.csv` plus `certificate.json`.
pub fn cmd_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let returns = load_input(cfg)?;
    let estimates = estimate(&returns, &cfg.estimation)?;
    let penalties = calibrate(&returns, &estimates.gamma, &cfg.calibration, cfg.seed)?;
    let problem = Problem::from_weights(estimates.gamma.clone(), estimates.mu.clone(), &penalties)?;

    let started = Instant::now();
    let (portfolio, iterations) = solve_detailed(cfg.solver, &problem, &cfg.solver_config)?;
    let wall_time = started.elapsed().as_secs_f64();

    let out = ensure_output_dir(cfg)?;
    let weights_path = out.join("weights.csv");
    ingest::write_weights(&weights_path, returns.asset_ids(), &portfolio.weights)?;
    let certificate = Certificate {
        objective: problem.objective(&portfolio.weight_vector()),
        certified_gap: portfolio.certified_gap,
        support_size: portfolio.support_size(),
        iterations,
        wall_time,
    };
    let certificate_path = out.join("certificate.json");
    write_json(&certificate_path, &certificate)?;

    println!(
        "solved {} assets with {}: {} held, objective {:.6e}, {} iterations",
        problem.n(),
        cfg.solver,
        certificate.support_size,
        certificate.objective,
        iterations,
    );
    println!(
        "wrote {} and {}",
        weights_path.display(),
        certificate_path.display()
    );
    Ok(())
}

/// Runs the rolling-window strategy comparison and writes `report.json`
/// plus a flat `daily_returns.csv`.
pub fn cmd_backtest(cfg: &RunConfig) -> Result<(), CliError> {
    let returns = load_input(cfg)?;
    let report = run_backtest(&returns, &cfg.backtest_config())?;

    let out = ensure_output_dir(cfg)?;
    let report_path = out.join("report.json");
    write_json(&report_path, &report)?;
    let daily_path = out.join("daily_returns.csv");
    write_daily_returns(&daily_path, &returns, &report.strategies)?;

    println!(
        "backtested {} windows ({} train / {} eval periods) over {} periods",
        report.windows,
        report.train_periods,
        report.eval_periods,
        returns.periods(),
    );
    for strategy in &report.strategies {
        println!(
            "  {:<22} sharpe {:>8.4}  turnover {:>8.4}",
            strategy.criterion.name(),
            strategy.sharpe,
            strategy.total_turnover,
        );
    }
    println!(
        "wrote {} and {}",
        report_path.display(),
        daily_path.display()
    );
    Ok(())
}

/// One row per out-of-sample day per strategy, labeled with the day's
/// period id.
fn write_daily_returns(
    path: &Path,
    returns: &ReturnMatrix,
    strategies: &[StrategyResult],
) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Data(format!("cannot write '{}': {e}", path.display())))?;
    writer
        .write_record(["strategy", "date", "excess_return"])
        .map_err(|e| CliError::Data(format!("cannot write '{}': {e}", path.display())))?;
    for strategy in strategies {
        let mut day = 0;
        for window in &strategy.windows {
            for period in window.eval_start..window.eval_end {
                let value = strategy.daily_returns.get(day).copied().ok_or_else(|| {
                    CliError::Data(format!(
                        "strategy {} reports fewer daily returns than window periods",
                        strategy.criterion.name()
                    ))
                })?;
                writer
                    .write_record([
                        strategy.criterion.name(),
                        returns.period_ids()[period].as_str(),
                        ingest::format_f64(value).as_str(),
                    ])
                    .map_err(|e| {
                        CliError::Data(format!("cannot write '{}': {e}", path.display()))
                    })?;
                day += 1;
            }
        }
    }
    writer
        .flush()
        .map_err(|e| CliError::data_io(format!("cannot flush '{}'", path.display()), e))
}

/// Times every configured solver on planted sparse instances and writes
/// `bench.csv` with one row per (cell, solver).
pub fn cmd_bench(cfg: &RunConfig) -> Result<(), CliError> {
    let out = ensure_output_dir(cfg)?;
    let path = out.join("bench.csv");
    let mut writer = csv::Writer::from_path(&path)
        .map_err(|e| CliError::Data(format!("cannot write '{}': {e}", path.display())))?;
    writer
        .write_record([
            "dimension",
            "sparsity_achieved",
            "solver",
            "wall_time_sec",
            "objective",
        ])
        .map_err(|e| CliError::Data(format!("cannot write '{}': {e}", path.display())))?;

    let mut solver_config = cfg.solver_config.clone();
    solver_config.tol = cfg.bench.tol;
    // Solves run one at a time so each timing owns the machine.
    for cell in &cfg.bench.cells {
        let instance = planted_instance(cell.dimension, cell.support, cfg.seed)?;
        for &kind in &cfg.bench.solvers {
            let started = Instant::now();
            let portfolio = solve(kind, &instance.problem, &solver_config)?;
            let wall = started.elapsed().as_secs_f64();
            let objective = instance.problem.objective(&portfolio.weight_vector());
            println!(
                "bench dimension={} support={} solver={} wall={:.3}s support_found={}",
                cell.dimension,
                cell.support,
                kind,
                wall,
                portfolio.support_size(),
            );
            writer
                .write_record([
                    cell.dimension.to_string(),
                    portfolio.support_size().to_string(),
                    kind.to_string(),
                    ingest::format_f64(wall),
                    ingest::format_f64(objective),
                ])
                .map_err(|e| CliError::Data(format!("cannot write '{}': {e}", path.display())))?;
        }
    }
    writer
        .flush()
        .map_err(|e| CliError::data_io(format!("cannot flush '{}'", path.display()), e))?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct EstimatesOut<'a> {
    asset_ids: &'a [String],
    mu: Vec<f64>,
    /// Covariance matrix, row major.
    gamma: Vec<Vec<f64>>,
    rho1: f64,
    rho2: f64,
    rho: f64,
    eta: f64,
    mean_method: &'static str,
    cov_method: &'static str,
}

/// Writes shrinkage estimates of the mean and covariance to
/// `estimates.json`.
pub fn cmd_estimate(cfg: &RunConfig) -> Result<(), CliError> {
    let returns = load_input(cfg)?;
    let estimates = estimate(&returns, &cfg.estimation)?;
    let n = returns.assets();
    let payload = EstimatesOut {
        asset_ids: returns.asset_ids(),
        mu: estimates.mu.iter().copied().collect(),
        gamma: (0..n)
            .map(|r| (0..n).map(|c| estimates.gamma[(r, c)]).collect())
            .collect(),
        rho1: estimates.rho1,
        rho2: estimates.rho2,
        rho: estimates.rho,
        eta: estimates.eta,
        mean_method: estimates.mean_method,
        cov_method: estimates.cov_method,
    };
    let out = ensure_output_dir(cfg)?;
    let path = out.join("estimates.json");
    write_json(&path, &payload)?;
    println!(
        "estimated {} assets over {} periods (shrinkage rho {:.4}, eta {:.6})",
        n,
        returns.periods(),
        estimates.rho,
        estimates.eta,
    );
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct PenaltiesOut<'a> {
    asset_ids: &'a [String],
    alpha: Vec<f64>,
    beta: Vec<f64>,
    p1: f64,
    p2: f64,
    replicates: usize,
    seed: u64,
}

/// Writes bootstrap-calibrated penalty weights to `penalties.json`.
pub fn cmd_calibrate(cfg: &RunConfig) -> Result<(), CliError> {
    let returns = load_input(cfg)?;
    let estimates = estimate(&returns, &cfg.estimation)?;
    let penalties = calibrate(&returns, &estimates.gamma, &cfg.calibration, cfg.seed)?;
    let payload = PenaltiesOut {
        asset_ids: returns.asset_ids(),
        alpha: penalties.alpha.iter().copied().collect(),
        beta: penalties.beta.iter().copied().collect(),
        p1: penalties.p1,
        p2: penalties.p2,
        replicates: penalties.replicates,
        seed: penalties.seed,
    };
    let out = ensure_output_dir(cfg)?;
    let path = out.join("penalties.json");
    write_json(&path, &payload)?;
    println!(
        "calibrated {} assets from {} bootstrap replicates (p1 {}, p2 {})",
        returns.assets(),
        payload.replicates,
        payload.p1,
        payload.p2,
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn ensure_output_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| {
        CliError::data_io(
            format!(
                "cannot create output directory '{}'",
                cfg.output_dir.display()
            ),
            e,
        )
    })?;
    Ok(cfg.output_dir.clone())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("cannot serialize '{}': {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::data_io(format!("cannot write '{}'", path.display()), e))
}
