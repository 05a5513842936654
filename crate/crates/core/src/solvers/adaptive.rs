//! Adaptive-support Bregman splitting.
//!
//! When the optimum is sparse, factoring the full `N×N` system is wasted
//! work. This solver keeps a small working set of coordinates, solves the
//! restriction of the problem to that set with [`split_bregman`], and then
//! screens the full gradient: any coordinate outside the current support
//! whose gradient escapes its `[−β_i, β_i]` band is a certified witness
//! that the support must grow. Violators are admitted by decreasing margin
//! `|g_i| − β_i` (ties broken by index), at least
//! [`SolverConfig::batch_size`] per round, and always enough to keep the
//! working set larger than the round number — which bounds the number of
//! rounds by the dimension. Coordinates with `β_i = 0` are never screened
//! out: they are permanently part of the working set, since nothing stops
//! them from taking weight.
//!
//! Each restricted solve is warm-started from the previous round: weights
//! and slack variables are carried over (zero on newly admitted
//! coordinates) and the Bregman multiplier is seeded with its known fixed
//! point `b_i = −g_i/(β_i λ)`, so later rounds converge in a handful of
//! iterations. On termination the full problem's certificate is evaluated
//! directly, so the returned gap never rests on restricted-problem
//! arithmetic.

use std::collections::BTreeSet;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::objective::Problem;
use crate::types::Portfolio;

use super::{
    certify_given_gradient, require_positive_alpha, resolve_lambda, split_bregman, BregmanState,
    SolverConfig,
};

/// Work counters from an adaptive-support solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdaptiveStats {
    /// Restricted solves performed.
    pub rounds: usize,
    /// Total Bregman updates across all restricted solves.
    pub inner_iterations: usize,
    /// Largest working set ever factored.
    pub peak_working_set: usize,
}

/// Minimizes the penalized objective by adaptive support growth; returns a
/// portfolio certified within [`SolverConfig::tol`] like [`split_bregman`],
/// but touches only small restricted problems when the optimum is sparse.
///
/// [`SolverConfig::max_outer`] caps the screening rounds (default: one per
/// dimension, the theoretical worst case); the final permitted round falls
/// back to the full coordinate set, so the cap degrades gracefully into a
/// plain full-dimensional solve rather than a premature failure.
pub fn adaptive_support(problem: &Problem, config: &SolverConfig) -> Result<Portfolio> {
    adaptive_support_with_stats(problem, config).map(|(portfolio, _)| portfolio)
}

/// [`adaptive_support`] plus work counters, for benchmarking and tests.
pub fn adaptive_support_with_stats(
    problem: &Problem,
    config: &SolverConfig,
) -> Result<(Portfolio, AdaptiveStats)> {
    config.validate()?;
    require_positive_alpha(problem)?;
    let n = problem.n();
    let beta = problem.beta();
    let m_bound = problem.default_m_bound();
    let max_rounds = config.max_outer.unwrap_or(n).max(1);
    // β_i = 0 coordinates live in every working set; see module docs.
    let free: Vec<usize> = (0..n).filter(|&i| beta[i] == 0.0).collect();

    let mut w = DVector::zeros(n);
    let mut d = DVector::zeros(n);
    let mut inner_tol = config.tol;
    let mut stats = AdaptiveStats {
        rounds: 0,
        inner_iterations: 0,
        peak_working_set: 0,
    };

    loop {
        let g = problem.smooth_gradient(&w);
        let mut violators: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            if w[i] == 0.0 && beta[i] > 0.0 {
                let margin = g[i].abs() - beta[i];
                if margin > 0.0 {
                    violators.push((i, margin));
                }
            }
        }
        let support: Vec<usize> = (0..n).filter(|&i| w[i] != 0.0).collect();

        if violators.is_empty() {
            if let Some(portfolio) = certify_given_gradient(problem, &w, config.tol, m_bound, &g) {
                return Ok((portfolio, stats));
            }
            // The screen is clean but the full-problem certificate still
            // misses: either unpenalized coordinates have not been solved
            // yet, or restricted-problem rounding left the residual a hair
            // over the line. Re-solve the current working set tighter.
            inner_tol *= 0.5;
        }

        if stats.rounds >= max_rounds {
            return Err(Error::NonConvergence {
                iterations: stats.inner_iterations,
                best_objective: problem.objective(&w),
                best_iterate: w.iter().copied().collect(),
            });
        }

        let last_allowed_round = stats.rounds + 1 == max_rounds;
        let work: Vec<usize> = if last_allowed_round {
            (0..n).collect()
        } else {
            violators.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .expect("gradient margins are finite")
                    .then_with(|| a.0.cmp(&b.0))
            });
            // Admitting at least rounds+1−|support| violators keeps the
            // working set ahead of the round count, bounding total rounds
            // by the dimension.
            let admit = config
                .batch_size
                .max((stats.rounds + 1).saturating_sub(support.len()));
            let mut set: BTreeSet<usize> = violators.iter().take(admit).map(|&(i, _)| i).collect();
            set.extend(support.iter().copied());
            set.extend(free.iter().copied());
            set.into_iter().collect()
        };
        if work.is_empty() {
            // Unreachable: an all-zero iterate with a clean screen and no
            // unpenalized coordinates always certifies above.
            return Err(Error::NonConvergence {
                iterations: stats.inner_iterations,
                best_objective: problem.objective(&w),
                best_iterate: w.iter().copied().collect(),
            });
        }

        let sub = problem.restrict(&work)?;
        let inner_config = SolverConfig {
            tol: inner_tol,
            ..config.clone()
        };
        let lambda = resolve_lambda(&inner_config, &sub);
        let mut init = BregmanState::zeros(work.len());
        let first_solve = stats.rounds == 0;
        for (a, &i) in work.iter().enumerate() {
            init.w[a] = w[i];
            init.d[a] = d[i];
            init.b[a] = if first_solve || beta[i] == 0.0 {
                0.0
            } else {
                -g[i] / (beta[i] * lambda)
            };
        }

        let (portfolio_sub, state_sub) = match split_bregman(&sub, &inner_config, Some(init)) {
            Ok(result) => result,
            Err(Error::NonConvergence {
                iterations,
                best_objective,
                best_iterate,
            }) => {
                // Zero off the working set, a restricted iterate has the
                // same objective on the full problem.
                let mut full = vec![0.0; n];
                for (a, &i) in work.iter().enumerate() {
                    full[i] = best_iterate[a];
                }
                return Err(Error::NonConvergence {
                    iterations: stats.inner_iterations + iterations,
                    best_objective,
                    best_iterate: full,
                });
            }
            Err(other) => return Err(other),
        };

        stats.rounds += 1;
        stats.inner_iterations += state_sub.iteration;
        stats.peak_working_set = stats.peak_working_set.max(work.len());

        w.fill(0.0);
        d.fill(0.0);
        for (a, &i) in work.iter().enumerate() {
            w[i] = portfolio_sub.weights[a];
            d[i] = state_sub.d[a];
        }
    }
}
