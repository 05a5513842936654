//! Seeded synthetic problem instances and return series for tests and
//! benchmarks.
//!
//! [`planted_instance`] builds problems whose exact minimizer — including
//! its support — is known by construction: a target portfolio `w̄` is drawn
//! first and the mean vector is then chosen so that `w̄` satisfies the
//! subgradient optimality conditions with strict margin off the support.
//! Strict convexity (every `α_i > 0`) makes that `w̄` the unique optimum,
//! so solvers can be graded against the truth at dimensions far beyond
//! what exhaustive enumeration can reach.
//!
//! [`random_instance`] draws unstructured problems (with a slice of exact
//! zeros in β to exercise unpenalized coordinates), and
//! [`synthetic_returns`] simulates a factor market with a small set of
//! assets carrying genuine positive drift, for backtest tests.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::objective::Problem;
use crate::types::ReturnMatrix;

/// A problem with a known unique optimum.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub problem: Problem,
    /// Sorted indices of the optimum's nonzero coordinates.
    pub planted_support: Vec<usize>,
    /// The exact optimal weights (zero off the planted support).
    pub planted_weights: DVector<f64>,
}

/// Standard normal draw via Box-Muller.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > f64::MIN_POSITIVE {
            let v: f64 = rng.random();
            return (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos();
        }
    }
}

/// Builds an `n`-dimensional problem whose unique minimizer has exactly
/// `support_size` nonzero weights at known positions.
///
/// The covariance is a low-rank factor Gram matrix plus a strictly
/// positive diagonal, `α_i ∈ [0.005, 0.015]`, `β_i ∈ [0.8, 1.2]`. Target
/// weights have magnitude in `[0.5, 1]` with random signs; off the support
/// the mean is placed strictly inside the gradient band (at most half the
/// available margin), so no solver tolerance ambiguity can flip a
/// coordinate. Deterministic in `(n, support_size, seed)`.
pub fn planted_instance(n: usize, support_size: usize, seed: u64) -> Result<SyntheticInstance> {
    if n == 0 {
        return Err(Error::InvalidConfig("dimension must be >= 1".into()));
    }
    if support_size > n {
        return Err(Error::InvalidConfig(format!(
            "support_size ({support_size}) exceeds dimension ({n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut planted_support: Vec<usize> =
        rand::seq::index::sample(&mut rng, n, support_size).into_vec();
    planted_support.sort_unstable();

    // Γ̂ = AAᵀ/m + diag(D): a few common factors plus idiosyncratic noise.
    let m = n.min(16);
    let a = DMatrix::from_fn(n, m, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let mut gamma = &a * a.transpose() / m as f64;
    for i in 0..n {
        gamma[(i, i)] += 0.3 + 0.4 * rng.random::<f64>();
    }
    // Exact symmetry, since AAᵀ is only symmetric up to rounding.
    let gamma = (&gamma + gamma.transpose()) * 0.5;

    let alpha = DVector::from_fn(n, |_, _| 0.005 + 0.01 * rng.random::<f64>());
    let beta = DVector::from_fn(n, |_, _| 0.8 + 0.4 * rng.random::<f64>());

    let mut w_bar = DVector::zeros(n);
    for &i in &planted_support {
        let magnitude = 0.5 + 0.5 * rng.random::<f64>();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        w_bar[i] = sign * magnitude;
    }

    // g = 2Rw̄ − μ̂ must equal −β∘sgn(w̄) on the support and stay strictly
    // inside [−β, β] elsewhere; solve for μ̂.
    let two_r_w = (&gamma * &w_bar + alpha.component_mul(&w_bar)) * 2.0;
    let mut mu = DVector::zeros(n);
    for i in 0..n {
        if w_bar[i] != 0.0 {
            mu[i] = two_r_w[i] + beta[i] * w_bar[i].signum();
        } else {
            mu[i] = two_r_w[i] + beta[i] * (rng.random::<f64>() - 0.5);
        }
    }

    let problem = Problem::new(gamma, mu, alpha, beta)?;
    Ok(SyntheticInstance {
        problem,
        planted_support,
        planted_weights: w_bar,
    })
}

/// Draws an unstructured random problem: dense factor covariance with a
/// small diagonal bump, means in `[−1, 1]`, `α_i ∈ [10⁻³, 0.1]`, and β
/// mixing exact zeros (roughly one coordinate in ten) with values up to
/// 0.6, so every solver code path — including unpenalized coordinates and
/// empty optima — gets exercised. Deterministic in `(n, seed)`.
pub fn random_instance(n: usize, seed: u64) -> Result<Problem> {
    if n == 0 {
        return Err(Error::InvalidConfig("dimension must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let mut gamma = &a * a.transpose() / n as f64;
    let bump = 0.02 + 0.08 * rng.random::<f64>();
    for i in 0..n {
        gamma[(i, i)] += bump;
    }
    let gamma = (&gamma + gamma.transpose()) * 0.5;
    let mu = DVector::from_fn(n, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let alpha = DVector::from_fn(n, |_, _| 0.001 + 0.099 * rng.random::<f64>());
    let beta = DVector::from_fn(n, |_, _| {
        if rng.random::<f64>() < 0.1 {
            0.0
        } else {
            0.6 * rng.random::<f64>()
        }
    });
    Problem::new(gamma, mu, alpha, beta)
}

/// Simulates `periods` rows of daily excess returns for `n_assets` assets
/// from a three-factor model. A small group of assets (one in ten,
/// rounded up) carries genuine positive drift of 15–30 basis points per
/// day; the rest have drift within ±1 basis point, so their estimated
/// means are almost pure noise. Idiosyncratic daily volatility is 0.5–2%.
/// Deterministic in `(n_assets, periods, seed)`.
pub fn synthetic_returns(n_assets: usize, periods: usize, seed: u64) -> Result<ReturnMatrix> {
    if n_assets == 0 || periods == 0 {
        return Err(Error::InvalidConfig(
            "synthetic returns need at least one asset and one period".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 3usize;
    let signal_count = n_assets.div_ceil(10);

    let loadings = DMatrix::from_fn(n_assets, k, |_, _| 0.8 * rng.random::<f64>() - 0.4);
    let idio_vol = DVector::from_fn(n_assets, |_, _| 0.005 + 0.015 * rng.random::<f64>());
    let drift = DVector::from_fn(n_assets, |i, _| {
        if i < signal_count {
            0.0015 + 0.0015 * rng.random::<f64>()
        } else {
            0.0002 * rng.random::<f64>() - 0.0001
        }
    });

    let factor_vol = 0.008;
    let mut data = DMatrix::zeros(periods, n_assets);
    for t in 0..periods {
        let f = DVector::from_fn(k, |_, _| factor_vol * normal(&mut rng));
        for j in 0..n_assets {
            let systematic: f64 = (0..k).map(|q| loadings[(j, q)] * f[q]).sum();
            data[(t, j)] = drift[j] + systematic + idio_vol[j] * normal(&mut rng);
        }
    }
    ReturnMatrix::from_data(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::check_exact_optimality;
    use crate::solvers::sign_enumeration_oracle;
    use approx::assert_relative_eq;

    #[test]
    fn planted_weights_satisfy_exact_optimality() {
        for seed in 0..5 {
            let inst = planted_instance(30, 7, seed).unwrap();
            let report = check_exact_optimality(
                &inst.problem,
                &inst.planted_weights,
                inst.problem.default_slack(),
            )
            .unwrap();
            assert!(report.optimal, "seed {seed}: {:?}", report.violations);
        }
    }

    #[test]
    fn planted_support_matches_weights() {
        let inst = planted_instance(25, 5, 2).unwrap();
        let from_weights: Vec<usize> = (0..25)
            .filter(|&i| inst.planted_weights[i] != 0.0)
            .collect();
        assert_eq!(inst.planted_support, from_weights);
        assert_eq!(inst.planted_support.len(), 5);
        assert!(inst.planted_support.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn planted_optimum_agrees_with_exhaustive_oracle() {
        for seed in [1, 7, 19] {
            let inst = planted_instance(8, 3, seed).unwrap();
            let oracle = sign_enumeration_oracle(&inst.problem).unwrap();
            for i in 0..8 {
                assert_relative_eq!(
                    oracle.weight_vector()[i],
                    inst.planted_weights[i],
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn instances_are_deterministic() {
        let a = planted_instance(20, 4, 99).unwrap();
        let b = planted_instance(20, 4, 99).unwrap();
        assert_eq!(a.problem.mu(), b.problem.mu());
        assert_eq!(a.problem.gamma(), b.problem.gamma());
        assert_eq!(a.planted_support, b.planted_support);

        let r1 = synthetic_returns(6, 40, 5).unwrap();
        let r2 = synthetic_returns(6, 40, 5).unwrap();
        assert_eq!(r1.data(), r2.data());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(planted_instance(0, 0, 1).is_err());
        assert!(planted_instance(5, 6, 1).is_err());
        assert!(random_instance(0, 1).is_err());
        assert!(synthetic_returns(0, 10, 1).is_err());
        assert!(synthetic_returns(10, 0, 1).is_err());
    }

    #[test]
    fn random_instance_mixes_zero_and_positive_penalties() {
        let p = random_instance(60, 3).unwrap();
        let zeros = p.beta().iter().filter(|&&b| b == 0.0).count();
        assert!(zeros > 0, "expected some exactly-zero beta entries");
        assert!(zeros < 60, "expected some positive beta entries");
        assert!(p.alpha_o() > 0.0);
    }

    #[test]
    fn signal_assets_have_higher_realized_drift() {
        let returns = synthetic_returns(20, 4000, 11).unwrap();
        let means = crate::estimation::sample_mean(&returns);
        let signal: f64 = (0..2).map(|j| means[j]).sum::<f64>() / 2.0;
        let noise: f64 = (2..20).map(|j| means[j]).sum::<f64>() / 18.0;
        assert!(
            signal > noise + 2e-4,
            "signal drift {signal} not separated from noise drift {noise}"
        );
    }

    #[test]
    fn returns_have_expected_shape() {
        let returns = synthetic_returns(7, 13, 0).unwrap();
        assert_eq!(returns.periods(), 13);
        assert_eq!(returns.assets(), 7);
    }
}
