//! Mean and covariance estimation from training returns.
//!
//! The covariance estimate shrinks the maximum-likelihood sample covariance
//! toward a scaled identity with data-driven intensities, then floors its
//! eigenvalues so downstream quadratic programs always see a strictly
//! positive-definite matrix. The mean estimate shrinks the per-asset sample
//! means toward a common scalar target with a data-driven intensity.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::types::ReturnMatrix;

/// Default floor applied to the per-period mean target: roughly the
/// long-run daily return of the US stock market.
pub const DEFAULT_ETA_FLOOR: f64 = 0.0004;

/// Default multiplier for the covariance eigenvalue floor; the floor itself
/// is `scale * max(1, trace(S)/N)` for sample covariance `S`.
pub const DEFAULT_EIGEN_FLOOR_SCALE: f64 = 1e-8;

/// Estimation settings shared by the solve and backtest pipelines.
#[derive(Debug, Clone)]
pub struct EstimationConfig {
    /// Multiplier for the covariance eigenvalue floor (see
    /// [`default_eigen_floor`]).
    pub eigen_floor_scale: f64,
    /// Lower bound for the mean-shrinkage target η.
    pub eta_floor: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            eigen_floor_scale: DEFAULT_EIGEN_FLOOR_SCALE,
            eta_floor: DEFAULT_ETA_FLOOR,
        }
    }
}

impl EstimationConfig {
    /// Validates field ranges, naming the offending field in the error.
    pub fn validate(&self) -> Result<()> {
        if !self.eigen_floor_scale.is_finite() || self.eigen_floor_scale < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "eigen_floor_scale must be finite and >= 0, got {}",
                self.eigen_floor_scale
            )));
        }
        if !self.eta_floor.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "eta_floor must be finite, got {}",
                self.eta_floor
            )));
        }
        Ok(())
    }
}

/// Joint mean/covariance estimates with their shrinkage diagnostics.
#[derive(Debug, Clone)]
pub struct Estimates {
    /// Per-asset expected excess return μ̂.
    pub mu: DVector<f64>,
    /// Symmetric positive-definite covariance estimate Γ̂.
    pub gamma: DMatrix<f64>,
    /// Weight on the sample covariance in the shrinkage combination.
    pub rho1: f64,
    /// Weight on the identity target in the shrinkage combination.
    pub rho2: f64,
    /// Mean-shrinkage intensity in [0, 1].
    pub rho: f64,
    /// Common mean target η.
    pub eta: f64,
    /// Name of the mean estimator.
    pub mean_method: &'static str,
    /// Name of the covariance estimator.
    pub cov_method: &'static str,
}

/// Arithmetic mean of each asset column. Infallible: `ReturnMatrix`
/// guarantees at least one row.
pub fn sample_mean(returns: &ReturnMatrix) -> DVector<f64> {
    let data = returns.data();
    let t = data.nrows() as f64;
    DVector::from_fn(data.ncols(), |j, _| data.column(j).sum() / t)
}

/// Maximum-likelihood (1/T-normalized) sample covariance of the columns.
///
/// Always symmetric positive semi-definite up to rounding.
pub fn sample_covariance(returns: &ReturnMatrix) -> Result<DMatrix<f64>> {
    let t = returns.periods();
    if t < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: t,
        });
    }
    let centered = center_columns(returns);
    let cov = centered.transpose() * &centered / t as f64;
    // The product is symmetric in exact arithmetic; enforce it exactly.
    Ok((&cov + cov.transpose()) * 0.5)
}

/// The default covariance eigenvalue floor: `scale * max(1, trace(S)/N)`.
pub fn default_eigen_floor(sample_cov: &DMatrix<f64>, scale: f64) -> f64 {
    let n = sample_cov.nrows() as f64;
    scale * (sample_cov.trace() / n).max(1.0)
}

/// Covariance shrinkage toward a scaled identity, `Γ̂ = ρ1·S + ρ2·I`.
///
/// Intensities follow the standard optimal scaled-identity-target scheme:
/// with `m = trace(S)/N`, `d² = ‖S − mI‖²_F/N`, and
/// `b̄² = (1/T²)·Σ_t ‖y_t y_tᵀ − S‖²_F/N` over centered observations `y_t`,
/// set `b² = min(b̄², d²)`, `ρ1 = (d² − b²)/d²`, and `ρ2 = m·b²/d²`.
/// Eigenvalues of the combination below `eigen_floor` are clamped up to it.
///
/// Returns `(gamma, rho1, rho2)`.
pub fn ledoit_wolf_covariance(
    returns: &ReturnMatrix,
    eigen_floor: f64,
) -> Result<(DMatrix<f64>, f64, f64)> {
    let t = returns.periods();
    let n = returns.assets();
    if t < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: t,
        });
    }
    let s = sample_covariance(returns)?;
    let m = s.trace() / n as f64;

    // d² = ‖S − mI‖²_F / N
    let mut d2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = if i == j { s[(i, j)] - m } else { s[(i, j)] };
            d2 += v * v;
        }
    }
    d2 /= n as f64;

    let (gamma, rho1, rho2) = if d2 == 0.0 {
        // S already equals its own target (including S = 0); nothing to mix.
        (s.clone(), 1.0, 0.0)
    } else {
        // b̄² = (1/T²)·Σ_t ‖y_t y_tᵀ − S‖²_F / N
        let centered = center_columns(returns);
        let mut b_bar2 = 0.0;
        for k in 0..t {
            let y = centered.row(k);
            let mut norm2 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let v = y[i] * y[j] - s[(i, j)];
                    norm2 += v * v;
                }
            }
            b_bar2 += norm2;
        }
        b_bar2 /= (t * t) as f64 * n as f64;

        let b2 = b_bar2.min(d2);
        let a2 = d2 - b2;
        let rho1 = a2 / d2;
        let rho2 = m * b2 / d2;
        let mut gamma = &s * rho1;
        for i in 0..n {
            gamma[(i, i)] += rho2;
        }
        (gamma, rho1, rho2)
    };

    let (floored, _) = linalg::floor_eigenvalues(gamma, eigen_floor)?;
    Ok((floored, rho1, rho2))
}

/// Mean shrinkage toward a common scalar target.
///
/// The target is `η = max(mean(mu_s), eta_floor)`; the intensity is
/// `ρ = min(1, (N − 2) / (T·(mu_s − η1)ᵀ Γ̂⁻¹ (mu_s − η1)))` clamped to
/// `[0, 1]`, with `ρ = 1` when `mu_s` already equals the target exactly.
/// The estimate is `μ̂ = (1 − ρ)·mu_s + ρ·η·1`.
///
/// Returns `(mu_hat, rho, eta)`.
pub fn james_stein_mean(
    mu_s: &DVector<f64>,
    gamma: &DMatrix<f64>,
    t_train: usize,
    eta_floor: f64,
) -> Result<(DVector<f64>, f64, f64)> {
    let n = mu_s.len();
    if gamma.nrows() != n || gamma.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "covariance for mean shrinkage",
            expected: n,
            actual: gamma.nrows(),
        });
    }
    if t_train == 0 {
        return Err(Error::InsufficientData {
            required: 1,
            actual: 0,
        });
    }
    let eta = (mu_s.mean()).max(eta_floor);
    let diff = mu_s.map(|x| x - eta);

    let rho = if diff.iter().all(|&x| x == 0.0) {
        // Estimate already sits at the target; fully shrinking is exact.
        1.0
    } else {
        let solver = linalg::SpdSolver::new(gamma.clone())?;
        let quad_form = diff.dot(&solver.solve(&diff));
        let denom = t_train as f64 * quad_form;
        if denom <= 0.0 {
            // Rounding can push a near-singular quadratic form to ~0; the
            // formula then wants maximal shrinkage.
            1.0
        } else {
            ((n as f64 - 2.0) / denom).clamp(0.0, 1.0)
        }
    };

    let mu_hat = DVector::from_fn(n, |i, _| (1.0 - rho) * mu_s[i] + rho * eta);
    Ok((mu_hat, rho, eta))
}

/// Full estimation pipeline: shrunk covariance, then shrunk mean using it.
pub fn estimate(returns: &ReturnMatrix, config: &EstimationConfig) -> Result<Estimates> {
    config.validate()?;
    let s = sample_covariance(returns)?;
    let floor = default_eigen_floor(&s, config.eigen_floor_scale);
    let (gamma, rho1, rho2) = ledoit_wolf_covariance(returns, floor)?;
    let mu_s = sample_mean(returns);
    let (mu, rho, eta) = james_stein_mean(&mu_s, &gamma, returns.periods(), config.eta_floor)?;
    Ok(Estimates {
        mu,
        gamma,
        rho1,
        rho2,
        rho,
        eta,
        mean_method: "james_stein",
        cov_method: "ledoit_wolf_scaled_identity",
    })
}

/// Subtracts each column's mean from that column.
fn center_columns(returns: &ReturnMatrix) -> DMatrix<f64> {
    let data = returns.data();
    let means = sample_mean(returns);
    let mut centered = data.clone();
    for j in 0..data.ncols() {
        let mean = means[j];
        for i in 0..data.nrows() {
            centered[(i, j)] -= mean;
        }
    }
    centered
}
