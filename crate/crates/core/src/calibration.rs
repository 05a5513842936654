//! Bootstrap calibration of the per-asset penalty weights.
//!
//! The ℓ2 weights α and ℓ1 weights β are set to empirical quantiles of the
//! bootstrap distribution of per-asset estimation errors: resample training
//! rows with replacement, re-estimate each asset's mean and variance, and
//! record the absolute deviation from the full-sample estimates. Quantile
//! levels `p1` (variance errors → α) and `p2` (mean errors → β) express
//! aversion to estimation risk.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::ReturnMatrix;

/// Default multiplier for the α floor; the floor itself is
/// `scale * mean(Γ̂_ii)` so it stays negligible on the data's own scale.
pub const DEFAULT_ALPHA_FLOOR_SCALE: f64 = 1e-10;

/// Default number of bootstrap replicates.
pub const DEFAULT_REPLICATES: usize = 200;

/// Per-asset penalty weights with their calibration provenance.
#[derive(Debug, Clone)]
pub struct PenaltyWeights {
    /// Squared-ℓ2 weights, one per asset; every entry ≥ the α floor > 0.
    pub alpha: DVector<f64>,
    /// ℓ1 weights, one per asset; entries ≥ 0.
    pub beta: DVector<f64>,
    /// Quantile level used for α.
    pub p1: f64,
    /// Quantile level used for β.
    pub p2: f64,
    /// Number of bootstrap replicates behind the quantiles.
    pub replicates: usize,
    /// RNG seed the replicates were drawn with.
    pub seed: u64,
}

/// Per-replicate, per-asset absolute estimation errors from one bootstrap
/// run: `mu_err[(k, i)]` is the mean-estimate deviation of asset `i` in
/// replicate `k`, and `gamma_err[(k, i)]` the variance-estimate deviation.
#[derive(Debug, Clone)]
pub struct BootstrapErrors {
    pub mu_err: DMatrix<f64>,
    pub gamma_err: DMatrix<f64>,
    /// Seed used to draw the resampling indices.
    pub seed: u64,
}

/// Calibration settings shared by the solve and backtest pipelines.
#[derive(Debug, Clone)]
pub struct CalibrationConfig {
    /// Number of bootstrap replicates K.
    pub replicates: usize,
    /// Quantile level for the variance-error distribution (→ α).
    pub p1: f64,
    /// Quantile level for the mean-error distribution (→ β).
    pub p2: f64,
    /// Multiplier for the α floor (`scale * mean(Γ̂_ii)`).
    pub alpha_floor_scale: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            replicates: DEFAULT_REPLICATES,
            p1: 0.7,
            p2: 0.7,
            alpha_floor_scale: DEFAULT_ALPHA_FLOOR_SCALE,
        }
    }
}

impl CalibrationConfig {
    /// Validates field ranges, naming the offending field in the error.
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if !(self.alpha_floor_scale > 0.0 && self.alpha_floor_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "alpha_floor_scale must be finite and > 0, got {}",
                self.alpha_floor_scale
            )));
        }
        Ok(())
    }
}

/// Default per-asset mean estimator: the arithmetic mean.
pub fn mean_estimator(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Default per-asset variance estimator: centered second moment with 1/T
/// normalization, matching the covariance estimator's convention.
pub fn variance_estimator(samples: &[f64]) -> f64 {
    let mean = mean_estimator(samples);
    samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / samples.len() as f64
}

/// Draws `replicates` bootstrap resamples of the training rows and records
/// each asset's absolute estimation error against the full-sample estimate.
///
/// Resampling indices are drawn i.i.d. uniform over rows from a ChaCha8
/// stream seeded with `seed`, in row-major order: all `T` indices of
/// replicate 0 first, then replicate 1, and so on. One index draw is shared
/// by every asset within a replicate, so cross-asset error dependence is
/// preserved. Both estimators must be order-invariant in their samples.
pub fn bootstrap_errors<FM, FV>(
    returns: &ReturnMatrix,
    mean_est: FM,
    var_est: FV,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapErrors>
where
    FM: Fn(&[f64]) -> f64,
    FV: Fn(&[f64]) -> f64,
{
    if replicates == 0 {
        return Err(Error::InvalidConfig("replicates must be at least 1".into()));
    }
    let t = returns.periods();
    let n = returns.assets();
    let data = returns.data();

    let columns: Vec<Vec<f64>> = (0..n)
        .map(|j| data.column(j).iter().copied().collect())
        .collect();
    let full_mean: Vec<f64> = columns.iter().map(|c| mean_est(c)).collect();
    let full_var: Vec<f64> = columns.iter().map(|c| var_est(c)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mu_err = DMatrix::zeros(replicates, n);
    let mut gamma_err = DMatrix::zeros(replicates, n);
    let mut indices = vec![0usize; t];
    let mut resampled = vec![0.0f64; t];
    for k in 0..replicates {
        for slot in indices.iter_mut() {
            *slot = rng.random_range(0..t);
        }
        for j in 0..n {
            let column = &columns[j];
            for (m, &idx) in indices.iter().enumerate() {
                resampled[m] = column[idx];
            }
            mu_err[(k, j)] = (mean_est(&resampled) - full_mean[j]).abs();
            gamma_err[(k, j)] = (var_est(&resampled) - full_var[j]).abs();
        }
    }
    Ok(BootstrapErrors {
        mu_err,
        gamma_err,
        seed,
    })
}

/// The `⌈p·K⌉`-th order statistic of `values`, with rank 0 (i.e. `p = 0`)
/// defined as 0. `p·K` within `1e-9·K` of an integer is snapped to it so
/// quantile levels like 0.3 stored in binary floating point do not round
/// the rank upward.
pub fn empirical_quantile(values: &[f64], p: f64) -> f64 {
    let k = values.len();
    let raw = p * k as f64;
    let nearest = raw.round();
    let rank = if (raw - nearest).abs() <= 1e-9 * (k as f64).max(1.0) {
        nearest as usize
    } else {
        raw.ceil() as usize
    };
    if rank == 0 {
        return 0.0;
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("error values are finite"));
    sorted[rank.min(k) - 1]
}

/// Maps bootstrap error distributions to penalty weights:
/// `α_i = max(alpha_floor, q_{p1}(variance errors of asset i))` and
/// `β_i = q_{p2}(mean errors of asset i)`.
pub fn quantile_weights(
    errors: &BootstrapErrors,
    p1: f64,
    p2: f64,
    alpha_floor: f64,
) -> Result<PenaltyWeights> {
    for (name, p) in [("p1", p1), ("p2", p2)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!(
                "{name} must lie in [0, 1], got {p}"
            )));
        }
    }
    if !(alpha_floor > 0.0 && alpha_floor.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "alpha_floor must be finite and > 0, got {alpha_floor}"
        )));
    }
    let n = errors.mu_err.ncols();
    let k = errors.mu_err.nrows();
    if errors.gamma_err.ncols() != n || errors.gamma_err.nrows() != k {
        return Err(Error::DimensionMismatch {
            context: "bootstrap error matrices",
            expected: n,
            actual: errors.gamma_err.ncols(),
        });
    }
    let mut alpha = DVector::zeros(n);
    let mut beta = DVector::zeros(n);
    let mut column = vec![0.0f64; k];
    for i in 0..n {
        for (kk, slot) in column.iter_mut().enumerate() {
            *slot = errors.gamma_err[(kk, i)];
        }
        alpha[i] = empirical_quantile(&column, p1).max(alpha_floor);
        for (kk, slot) in column.iter_mut().enumerate() {
            *slot = errors.mu_err[(kk, i)];
        }
        beta[i] = empirical_quantile(&column, p2);
    }
    Ok(PenaltyWeights {
        alpha,
        beta,
        p1,
        p2,
        replicates: k,
        seed: errors.seed,
    })
}

/// Full calibration pipeline with the default estimators: bootstrap the
/// training returns, then map error quantiles to weights. `gamma` is only
/// used to scale the α floor to the data (`alpha_floor_scale * mean(Γ̂_ii)`).
pub fn calibrate(
    returns: &ReturnMatrix,
    gamma: &DMatrix<f64>,
    config: &CalibrationConfig,
    seed: u64,
) -> Result<PenaltyWeights> {
    config.validate()?;
    let errors = bootstrap_errors(
        returns,
        mean_estimator,
        variance_estimator,
        config.replicates,
        seed,
    )?;
    let floor = config.alpha_floor_scale * gamma.diagonal().mean();
    quantile_weights(&errors, config.p1, config.p2, floor)
}
