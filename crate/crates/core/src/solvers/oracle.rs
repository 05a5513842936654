//! Exhaustive reference minimizer for tiny problems.
//!
//! The penalized objective is piecewise quadratic: on a fixed sign pattern
//! `s ∈ {−1, 0, 1}ᴺ` its minimizer solves the linear system
//! `2·R_AA·w_A = μ̂_A − β_A∘s_A` over the active coordinates
//! `A = {i : s_i ≠ 0}` with `w = 0` elsewhere. Enumerating all `3ᴺ`
//! patterns, keeping the candidates whose solution is sign-consistent and
//! whose inactive coordinates satisfy the gradient band `|g_i| ≤ β_i`
//! (within a data-scaled slack), and taking the lowest objective yields
//! the exact global minimizer. Cost grows as `3ᴺ·N³`, so the dimension is
//! capped; this exists purely to validate the iterative solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::objective::Problem;
use crate::types::Portfolio;

/// Hard cap on the dimension accepted by [`sign_enumeration_oracle`].
pub const ORACLE_MAX_DIMENSION: usize = 15;

/// Computes the exact minimizer by enumerating all sign patterns.
///
/// Rejects problems with more than [`ORACLE_MAX_DIMENSION`] assets
/// ([`Error::ProblemTooLarge`]); at the cap a call costs `3¹⁵ ≈ 1.4×10⁷`
/// small linear solves, so prefer single-digit dimensions in test loops.
/// The returned portfolio carries no certified gap: it *is* the reference.
pub fn sign_enumeration_oracle(problem: &Problem) -> Result<Portfolio> {
    let n = problem.n();
    if n > ORACLE_MAX_DIMENSION {
        return Err(Error::ProblemTooLarge {
            limit: ORACLE_MAX_DIMENSION,
            actual: n,
        });
    }
    let slack = problem.default_slack();
    let r = problem.r();
    let mu = problem.mu();
    let beta = problem.beta();

    let mut signs = vec![-1i32; n];
    let mut best: Option<(f64, DVector<f64>)> = None;

    'patterns: loop {
        let active: Vec<usize> = (0..n).filter(|&i| signs[i] != 0).collect();
        let mut w = DVector::<f64>::zeros(n);
        let mut feasible = true;

        if !active.is_empty() {
            let k = active.len();
            let mut a = DMatrix::<f64>::zeros(k, k);
            let mut rhs = DVector::<f64>::zeros(k);
            for (p, &i) in active.iter().enumerate() {
                for (q, &j) in active.iter().enumerate() {
                    a[(p, q)] = 2.0 * r[(i, j)];
                }
                rhs[p] = mu[i] - beta[i] * f64::from(signs[i]);
            }
            match a.lu().solve(&rhs) {
                Some(solution) => {
                    for (p, &i) in active.iter().enumerate() {
                        let wi = solution[p];
                        // Sign consistency; an exact zero only shrinks the
                        // support and remains admissible.
                        if !wi.is_finite() || wi * f64::from(signs[i]) < 0.0 {
                            feasible = false;
                            break;
                        }
                        w[i] = wi;
                    }
                }
                None => feasible = false,
            }
        }

        if feasible {
            let g = problem.smooth_gradient(&w);
            for i in 0..n {
                if signs[i] == 0 && g[i].abs() > beta[i] + slack {
                    feasible = false;
                    break;
                }
            }
        }

        if feasible {
            let value = problem.objective(&w);
            if best.as_ref().is_none_or(|(bv, _)| value < *bv) {
                best = Some((value, w));
            }
        }

        // Advance the base-3 odometer over {−1, 0, 1}; done after the
        // all-ones pattern.
        let mut pos = 0;
        loop {
            if pos == n {
                break 'patterns;
            }
            if signs[pos] < 1 {
                signs[pos] += 1;
                break;
            }
            signs[pos] = -1;
            pos += 1;
        }
    }

    match best {
        Some((_, w)) => Ok(Portfolio::from_dense(&w, None)),
        None => Err(Error::LinearAlgebra(
            "sign enumeration found no stationary candidate; the optimum's own \
             pattern always qualifies, so the problem data must be degenerate"
                .into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::shrink;
    use crate::synthetic::random_instance;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_matches_soft_threshold_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let gamma = 0.2 + rng.random::<f64>();
            let mu = 4.0 * rng.random::<f64>() - 2.0;
            let alpha = 0.01 + rng.random::<f64>();
            let beta = rng.random::<f64>();
            let p = Problem::new(
                DMatrix::from_element(1, 1, gamma),
                DVector::from_element(1, mu),
                DVector::from_element(1, alpha),
                DVector::from_element(1, beta),
            )
            .unwrap();
            let portfolio = sign_enumeration_oracle(&p).unwrap();
            let expected = shrink(mu, beta) / (2.0 * (gamma + alpha));
            assert_relative_eq!(portfolio.weights[0], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn diagonal_problem_decouples() {
        // With Γ̂ diagonal each coordinate is an independent scalar problem.
        let gamma = DMatrix::from_partial_diagonal(3, 3, &[1.0, 0.5, 2.0]);
        let mu = DVector::from_row_slice(&[1.0, -0.6, 0.1]);
        let alpha = DVector::from_row_slice(&[0.1, 0.2, 0.05]);
        let beta = DVector::from_row_slice(&[0.3, 0.2, 0.2]);
        let p = Problem::new(gamma, mu.clone(), alpha.clone(), beta.clone()).unwrap();
        let portfolio = sign_enumeration_oracle(&p).unwrap();
        let diag = [1.0, 0.5, 2.0];
        for i in 0..3 {
            let expected = shrink(mu[i], beta[i]) / (2.0 * (diag[i] + alpha[i]));
            assert_relative_eq!(portfolio.weights[i], expected, epsilon = 1e-12);
        }
        // Third coordinate is inside the dead zone.
        assert_eq!(portfolio.weights[2], 0.0);
    }

    #[test]
    fn zero_optimum_when_penalties_dominate() {
        let p = Problem::new(
            DMatrix::identity(4, 4),
            DVector::from_row_slice(&[0.1, -0.2, 0.05, 0.0]),
            DVector::from_element(4, 0.1),
            DVector::from_row_slice(&[0.2, 0.25, 0.1, 0.3]),
        )
        .unwrap();
        let portfolio = sign_enumeration_oracle(&p).unwrap();
        assert!(portfolio.support.is_empty());
    }

    #[test]
    fn oversized_problem_is_rejected() {
        let p = random_instance(16, 0).unwrap();
        match sign_enumeration_oracle(&p).unwrap_err() {
            Error::ProblemTooLarge { limit, actual } => {
                assert_eq!(limit, 15);
                assert_eq!(actual, 16);
            }
            other => panic!("expected ProblemTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn oracle_result_satisfies_exact_optimality() {
        for seed in 0..5 {
            let p = random_instance(5, 300 + seed).unwrap();
            let portfolio = sign_enumeration_oracle(&p).unwrap();
            let report = crate::objective::check_exact_optimality(
                &p,
                &portfolio.weight_vector(),
                1e-7 * (1.0 + p.mu().amax()),
            )
            .unwrap();
            assert!(report.optimal, "seed {seed}: {:?}", report.violations);
        }
    }
}
