//! `sparsemv` — sparse mean-variance portfolios from the command line.
//!
//! Flags may also be supplied through `SPARSEMV_*` environment
//! variables; explicit flags win. Exit codes: 0 success, 2
//! configuration error, 3 data error, 4 solver non-convergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sparsemv_cli::commands;
use sparsemv_cli::config::{self, Overrides};
use sparsemv_cli::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "sparsemv",
    version,
    about = "Sparse mean-variance portfolios: calibrated elastic-net penalties, \
             certified solvers, rolling backtests"
)]
struct Cli {
    /// JSON run configuration file (see README for the schema).
    #[arg(long, global = true, env = "SPARSEMV_CONFIG", value_name = "FILE")]
    config: Option<PathBuf>,

    /// Input CSV: dated prices by default, pre-computed excess returns
    /// when the config sets input_kind = "returns".
    #[arg(long, global = true, env = "SPARSEMV_INPUT", value_name = "FILE")]
    input: Option<PathBuf>,

    /// Directory artifacts are written into (created if absent).
    #[arg(long, global = true, env = "SPARSEMV_OUT", value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed for the calibration bootstrap and backtest windows.
    #[arg(long, global = true, env = "SPARSEMV_SEED", value_name = "U64")]
    seed: Option<u64>,

    /// Certified objective-gap tolerance for solves.
    #[arg(long, global = true, env = "SPARSEMV_TOL", value_name = "REAL")]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate moments, calibrate penalties, and solve one portfolio;
    /// writes weights.csv and certificate.json.
    Solve,
    /// Compare strategies over rolling windows; writes report.json and
    /// daily_returns.csv.
    Backtest,
    /// Time each solver on planted sparse instances; writes bench.csv.
    Bench,
    /// Shrinkage estimates of the mean and covariance; writes
    /// estimates.json.
    Estimate,
    /// Bootstrap-calibrated penalty weights; writes penalties.json.
    Calibrate,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        input: cli.input.clone(),
        out: cli.out.clone(),
        seed: cli.seed,
        tol: cli.tol,
    };
    let cfg = config::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Solve => commands::cmd_solve(&cfg),
        Command::Backtest => commands::cmd_backtest(&cfg),
        Command::Bench => commands::cmd_bench(&cfg),
        Command::Estimate => commands::cmd_estimate(&cfg),
        Command::Calibrate => commands::cmd_calibrate(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
