//! Rolling-window out-of-sample evaluation.
//!
//! The return history is split into overlapping windows: each trains the
//! estimators on `train_periods` consecutive rows, solves one portfolio
//! per strategy, holds it over the following `eval_periods` rows, then
//! rolls forward by `eval_periods`. The final evaluation stretch may be
//! shorter. Every window draws its bootstrap replicates from a seed mixed
//! deterministically from the run seed and the window index, so reports
//! are reproducible and insensitive to which strategies are enabled.
//!
//! Strategies differ only in how the penalty weights are derived from the
//! training window:
//!
//! - [`Criterion::Unpenalized`]: no ℓ¹ term, ridge term at the numerical
//!   floor — classical mean-variance, the baseline.
//! - [`Criterion::WeightedElasticNet`]: per-asset `α`, `β` from bootstrap
//!   error quantiles.
//! - [`Criterion::UniformElasticNet`]: the calibrated weights averaged
//!   across assets, isolating the value of per-asset weighting.
//! - [`Criterion::WeightedLasso`]: calibrated `β` only, ridge term at the
//!   floor.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::ops::Range;

use crate::calibration::{calibrate, CalibrationConfig, PenaltyWeights};
use crate::error::{Error, Result};
use crate::estimation::{estimate, EstimationConfig};
use crate::objective::Problem;
use crate::solvers::{solve, SolverConfig, SolverKind};
use crate::types::ReturnMatrix;

/// Default training window length (one trading year of daily data).
pub const DEFAULT_TRAIN_PERIODS: usize = 252;
/// Default evaluation window length (one trading quarter).
pub const DEFAULT_EVAL_PERIODS: usize = 63;

/// Portfolio-construction strategy evaluated by the backtest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Unpenalized,
    WeightedElasticNet,
    UniformElasticNet,
    WeightedLasso,
}

impl Criterion {
    /// Stable lowercase names, matching the serialized form.
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Unpenalized => "unpenalized",
            Criterion::WeightedElasticNet => "weighted_elastic_net",
            Criterion::UniformElasticNet => "uniform_elastic_net",
            Criterion::WeightedLasso => "weighted_lasso",
        }
    }

    /// All strategies, in report display order.
    pub const ALL: [Criterion; 4] = [
        Criterion::Unpenalized,
        Criterion::WeightedElasticNet,
        Criterion::UniformElasticNet,
        Criterion::WeightedLasso,
    ];

    fn needs_calibration(self) -> bool {
        !matches!(self, Criterion::Unpenalized)
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unpenalized" => Ok(Criterion::Unpenalized),
            "weighted_elastic_net" => Ok(Criterion::WeightedElasticNet),
            "uniform_elastic_net" => Ok(Criterion::UniformElasticNet),
            "weighted_lasso" => Ok(Criterion::WeightedLasso),
            other => Err(Error::InvalidConfig(format!(
                "unknown strategy '{other}' (expected unpenalized, weighted_elastic_net, \
                 uniform_elastic_net, or weighted_lasso)"
            ))),
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Full configuration of a backtest run.
#[derive(Debug, Clone)]
pub struct BacktestConfig {
    pub train_periods: usize,
    pub eval_periods: usize,
    pub criteria: Vec<Criterion>,
    pub solver: SolverKind,
    pub solver_config: SolverConfig,
    pub estimation: EstimationConfig,
    pub calibration: CalibrationConfig,
    /// Run seed; each window's bootstrap seed is derived from it.
    pub seed: u64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            train_periods: DEFAULT_TRAIN_PERIODS,
            eval_periods: DEFAULT_EVAL_PERIODS,
            criteria: Criterion::ALL.to_vec(),
            solver: SolverKind::AdaptiveSupport,
            solver_config: SolverConfig::default(),
            estimation: EstimationConfig::default(),
            calibration: CalibrationConfig::default(),
            seed: 0,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_periods < 2 {
            return Err(Error::InvalidConfig(format!(
                "train_periods must be >= 2, got {}",
                self.train_periods
            )));
        }
        if self.eval_periods == 0 {
            return Err(Error::InvalidConfig("eval_periods must be >= 1".into()));
        }
        if self.criteria.is_empty() {
            return Err(Error::InvalidConfig(
                "criteria must name at least one strategy".into(),
            ));
        }
        self.solver_config.validate()?;
        self.estimation.validate()?;
        self.calibration.validate()
    }
}

/// Per-window record for one strategy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowSummary {
    pub window: usize,
    pub train_start: usize,
    pub eval_start: usize,
    pub eval_end: usize,
    pub support_size: usize,
    pub certified_gap: Option<f64>,
    /// ℓ¹ distance from the previous window's weights (from zero for the
    /// first window).
    pub turnover: f64,
    pub weights: Vec<f64>,
}

/// Out-of-sample record for one strategy across all windows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyResult {
    pub criterion: Criterion,
    /// Per-period Sharpe ratio of the concatenated evaluation returns
    /// (mean over population standard deviation, not annualized).
    pub sharpe: f64,
    pub mean_return: f64,
    pub volatility: f64,
    pub total_turnover: f64,
    pub windows: Vec<WindowSummary>,
    pub daily_returns: Vec<f64>,
}

/// Complete backtest output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BacktestReport {
    pub train_periods: usize,
    pub eval_periods: usize,
    pub windows: usize,
    pub seed: u64,
    pub strategies: Vec<StrategyResult>,
}

/// The train/evaluation index ranges of every window: training spans
/// `[k·eval, k·eval + train)`, evaluation the following `eval` periods
/// (truncated at the end of the sample). A window exists only if its
/// evaluation stretch is nonempty.
pub fn rolling_windows(
    periods: usize,
    train: usize,
    eval: usize,
) -> Vec<(Range<usize>, Range<usize>)> {
    let mut windows = Vec::new();
    if eval == 0 {
        return windows;
    }
    let mut start = 0;
    while start + train < periods {
        let eval_start = start + train;
        let eval_end = (eval_start + eval).min(periods);
        windows.push((start..eval_start, eval_start..eval_end));
        start += eval;
    }
    windows
}

/// Per-period Sharpe ratio: mean over population standard deviation, not
/// annualized. Needs at least two observations and nonzero dispersion.
pub fn sharpe_ratio(returns: &[f64]) -> Result<f64> {
    if returns.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: returns.len(),
        });
    }
    let t = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / t;
    let variance = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / t;
    let std = variance.sqrt();
    if std == 0.0 {
        return Err(Error::DegenerateSeries {
            periods: returns.len(),
        });
    }
    Ok(mean / std)
}

/// Derives a window's bootstrap seed from the run seed (a SplitMix64-style
/// finalizer). Stable across releases: reports for a fixed seed are part
/// of the output contract, and the derivation keeps window `k`'s draws
/// identical whether or not other windows or strategies are enabled.
pub fn window_seed(seed: u64, window: usize) -> u64 {
    let mut z = seed ^ (window as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn penalties_for(
    criterion: Criterion,
    gamma_diag_mean: f64,
    calibrated: Option<&PenaltyWeights>,
    calibration: &CalibrationConfig,
    n: usize,
) -> (DVector<f64>, DVector<f64>) {
    let floor = calibration.alpha_floor_scale * gamma_diag_mean;
    match criterion {
        Criterion::Unpenalized => (DVector::from_element(n, floor), DVector::zeros(n)),
        Criterion::WeightedElasticNet => {
            let cal = calibrated.expect("calibration ran for penalized strategies");
            (cal.alpha.clone(), cal.beta.clone())
        }
        Criterion::UniformElasticNet => {
            let cal = calibrated.expect("calibration ran for penalized strategies");
            (
                DVector::from_element(n, cal.alpha.mean()),
                DVector::from_element(n, cal.beta.mean()),
            )
        }
        Criterion::WeightedLasso => {
            let cal = calibrated.expect("calibration ran for penalized strategies");
            (DVector::from_element(n, floor), cal.beta.clone())
        }
    }
}

/// Runs the rolling-window backtest and aggregates per-strategy results.
///
/// Fails fast with [`Error::BacktestWindow`] naming the window where
/// estimation, calibration, or a solve failed.
pub fn run_backtest(returns: &ReturnMatrix, config: &BacktestConfig) -> Result<BacktestReport> {
    config.validate()?;
    let periods = returns.periods();
    if periods < config.train_periods + 1 {
        return Err(Error::InsufficientData {
            required: config.train_periods + 1,
            actual: periods,
        });
    }
    let windows = rolling_windows(periods, config.train_periods, config.eval_periods);
    let n = returns.assets();
    let needs_calibration = config.criteria.iter().any(|c| c.needs_calibration());

    struct Accumulator {
        daily: Vec<f64>,
        summaries: Vec<WindowSummary>,
        previous: DVector<f64>,
        turnover_total: f64,
    }
    let mut accumulators: Vec<Accumulator> = config
        .criteria
        .iter()
        .map(|_| Accumulator {
            daily: Vec::new(),
            summaries: Vec::new(),
            previous: DVector::zeros(n),
            turnover_total: 0.0,
        })
        .collect();

    for (k, (train, eval)) in windows.iter().enumerate() {
        let wrap = |e: Error| Error::BacktestWindow {
            window: k,
            source: Box::new(e),
        };
        let train_data = returns.slice_periods(train.clone()).map_err(wrap)?;
        let estimates = estimate(&train_data, &config.estimation).map_err(wrap)?;
        let calibrated = if needs_calibration {
            Some(
                calibrate(
                    &train_data,
                    &estimates.gamma,
                    &config.calibration,
                    window_seed(config.seed, k),
                )
                .map_err(wrap)?,
            )
        } else {
            None
        };
        let gamma_diag_mean = estimates.gamma.diagonal().mean();

        for (criterion, acc) in config.criteria.iter().zip(accumulators.iter_mut()) {
            let (alpha, beta) = penalties_for(
                *criterion,
                gamma_diag_mean,
                calibrated.as_ref(),
                &config.calibration,
                n,
            );
            let problem = Problem::new(estimates.gamma.clone(), estimates.mu.clone(), alpha, beta)
                .map_err(wrap)?;
            let portfolio = solve(config.solver, &problem, &config.solver_config).map_err(wrap)?;
            let w = portfolio.weight_vector();

            for t in eval.clone() {
                let mut portfolio_return = 0.0;
                for j in 0..n {
                    portfolio_return += returns.data()[(t, j)] * w[j];
                }
                acc.daily.push(portfolio_return);
            }
            let turnover: f64 = (0..n).map(|j| (w[j] - acc.previous[j]).abs()).sum();
            acc.turnover_total += turnover;
            acc.summaries.push(WindowSummary {
                window: k,
                train_start: train.start,
                eval_start: eval.start,
                eval_end: eval.end,
                support_size: portfolio.support_size(),
                certified_gap: portfolio.certified_gap,
                turnover,
                weights: portfolio.weights.clone(),
            });
            acc.previous = w;
        }
    }

    let mut strategies = Vec::with_capacity(config.criteria.len());
    for (criterion, acc) in config.criteria.iter().zip(accumulators) {
        let sharpe = sharpe_ratio(&acc.daily)?;
        let t = acc.daily.len() as f64;
        let mean_return = acc.daily.iter().sum::<f64>() / t;
        let variance = acc
            .daily
            .iter()
            .map(|r| (r - mean_return) * (r - mean_return))
            .sum::<f64>()
            / t;
        strategies.push(StrategyResult {
            criterion: *criterion,
            sharpe,
            mean_return,
            volatility: variance.sqrt(),
            total_turnover: acc.turnover_total,
            windows: acc.summaries,
            daily_returns: acc.daily,
        });
    }

    Ok(BacktestReport {
        train_periods: config.train_periods,
        eval_periods: config.eval_periods,
        windows: windows.len(),
        seed: config.seed,
        strategies,
    })
}
