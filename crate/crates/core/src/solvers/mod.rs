//! Solvers for the penalized mean-variance objective.
//!
//! All solvers minimize the same strictly convex objective held by a
//! [`Problem`] and stop on the same computable certificate: an iterate is
//! accepted once [`objective::truncate_and_certify`] (preferred, because it
//! also cleans up near-zero entries) or [`objective::check_epsilon_optimality`]
//! proves its objective lies within [`SolverConfig::tol`] of the optimum. The
//! certified bound is recorded on the returned [`Portfolio`].
//!
//! - [`split_bregman`]: Bregman splitting with an ℓ¹ slack variable; one
//!   Cholesky factorization, then cheap iterations.
//! - [`adaptive_support`]: solves a sequence of small support-restricted
//!   problems, growing the support by screening the full gradient; exact on
//!   termination and much faster when the optimum is sparse.
//! - [`fista`]: accelerated proximal-gradient baseline.
//! - [`sign_enumeration_oracle`]: exhaustive reference minimizer for tiny
//!   problems, used to validate the iterative solvers.

mod adaptive;
mod fista;
mod oracle;
mod split_bregman;

pub use adaptive::{adaptive_support, adaptive_support_with_stats, AdaptiveStats};
pub use fista::{fista, fista_with_iterations};
pub use oracle::sign_enumeration_oracle;
pub use split_bregman::{split_bregman, BregmanState};

use crate::error::{Error, Result};
use crate::objective::{
    epsilon_optimal_given_gradient, truncate_and_certify_given_gradient, truncation_gap_factor,
    Problem,
};
use crate::types::Portfolio;
use nalgebra::DVector;

/// Default certification tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default number of screening violators admitted per adaptive round.
pub const DEFAULT_BATCH_SIZE: usize = 20;
/// Default cap on Bregman (or proximal-gradient) iterations per solve.
pub const DEFAULT_MAX_INNER: usize = 10_000;

/// Tuning knobs shared by all iterative solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Bregman coupling strength λ. `None` picks a scale-invariant default,
    /// `2·mean(diag R) / mean(β²)`, which keeps the per-iteration
    /// contraction factor bounded away from 1 regardless of the data's
    /// units (see [`resolve_lambda`]).
    pub lambda: Option<f64>,
    /// Certified objective-gap tolerance; solvers stop once an iterate is
    /// proven within `tol` of the optimal objective value.
    pub tol: f64,
    /// Number of new screening violators admitted per adaptive-support
    /// round (the working set may grow faster; see [`adaptive_support`]).
    pub batch_size: usize,
    /// Cap on adaptive-support outer rounds. `None` means one round per
    /// dimension, which is the theoretical worst case.
    pub max_outer: Option<usize>,
    /// Cap on Bregman / proximal-gradient iterations in a single solve.
    pub max_inner: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            tol: DEFAULT_TOL,
            batch_size: DEFAULT_BATCH_SIZE,
            max_outer: None,
            max_inner: DEFAULT_MAX_INNER,
        }
    }
}

impl SolverConfig {
    /// Validates every field, naming the offending one in the error.
    pub fn validate(&self) -> Result<()> {
        if let Some(lambda) = self.lambda {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "lambda must be finite and > 0, got {lambda}"
                )));
            }
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol must be finite and > 0, got {}",
                self.tol
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.max_outer == Some(0) {
            return Err(Error::InvalidConfig("max_outer must be >= 1".into()));
        }
        if self.max_inner == 0 {
            return Err(Error::InvalidConfig("max_inner must be >= 1".into()));
        }
        Ok(())
    }

    /// Convenience constructor: defaults with the given tolerance.
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Solver selector for configuration files and command lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    SplitBregman,
    AdaptiveSupport,
    Fista,
}

impl SolverKind {
    /// Stable lowercase names, matching the serialized form.
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::SplitBregman => "split_bregman",
            SolverKind::AdaptiveSupport => "adaptive_support",
            SolverKind::Fista => "fista",
        }
    }

    /// All solvers, in benchmark display order.
    pub const ALL: [SolverKind; 3] = [
        SolverKind::SplitBregman,
        SolverKind::AdaptiveSupport,
        SolverKind::Fista,
    ];
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split_bregman" => Ok(SolverKind::SplitBregman),
            "adaptive_support" => Ok(SolverKind::AdaptiveSupport),
            "fista" => Ok(SolverKind::Fista),
            other => Err(Error::InvalidConfig(format!(
                "unknown solver '{other}' (expected split_bregman, adaptive_support, or fista)"
            ))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs the selected solver. All variants return a portfolio certified
/// within [`SolverConfig::tol`] of the optimal objective.
pub fn solve(kind: SolverKind, problem: &Problem, config: &SolverConfig) -> Result<Portfolio> {
    solve_detailed(kind, problem, config).map(|(portfolio, _)| portfolio)
}

/// [`solve`] plus the total number of inner iterations the solver spent,
/// for reporting. For the adaptive-support solver this counts iterations
/// summed over all restricted subproblems.
pub fn solve_detailed(
    kind: SolverKind,
    problem: &Problem,
    config: &SolverConfig,
) -> Result<(Portfolio, usize)> {
    match kind {
        SolverKind::SplitBregman => {
            split_bregman(problem, config, None).map(|(p, state)| (p, state.iteration))
        }
        SolverKind::AdaptiveSupport => adaptive_support_with_stats(problem, config)
            .map(|(p, stats)| (p, stats.inner_iterations)),
        SolverKind::Fista => fista_with_iterations(problem, config),
    }
}

/// Scalar soft-threshold: `sign(x)·max(|x| − gamma, 0)` for `gamma ≥ 0`.
pub fn shrink(x: f64, gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0, "shrink threshold must be >= 0");
    if x > gamma {
        x - gamma
    } else if x < -gamma {
        x + gamma
    } else {
        0.0
    }
}

/// The λ actually used by a solve: the configured value if set, otherwise
/// `2·mean(diag R) / mean(β²)`. The default makes the w-update matrix
/// `2R + λ·diag(β)²` split its weight evenly between the quadratic and the
/// coupling term on average, so the fixed-point contraction rate stays
/// roughly constant under rescaling of the returns. When every `β_i` is
/// zero the coupling is inert and λ falls back to 1.
pub fn resolve_lambda(config: &SolverConfig, problem: &Problem) -> f64 {
    if let Some(lambda) = config.lambda {
        return lambda;
    }
    let n = problem.n() as f64;
    let mean_beta_sq = problem.beta().iter().map(|b| b * b).sum::<f64>() / n;
    if mean_beta_sq > 0.0 {
        2.0 * problem.r().diagonal().mean() / mean_beta_sq
    } else {
        1.0
    }
}

/// Certificate ε that makes the truncating certificate's proven gap,
/// `((√2+1)²/2)·ε`, equal to `tol`.
pub(crate) fn certificate_epsilon(tol: f64) -> f64 {
    tol / truncation_gap_factor()
}

/// Tries both stopping certificates on `w`, given its gradient.
///
/// The truncating certificate is tried first because it returns a cleaned
/// iterate with near-zero entries removed; when its strict gradient band is
/// infeasible (e.g. coordinates with `β_i < ε`, including β ≡ 0) the
/// exact-support certificate still applies. Either way the returned
/// portfolio's gap is `tol`.
pub(crate) fn certify_given_gradient(
    problem: &Problem,
    w: &DVector<f64>,
    tol: f64,
    m_bound: f64,
    g: &DVector<f64>,
) -> Option<Portfolio> {
    let epsilon = certificate_epsilon(tol);
    let (portfolio, certified) =
        truncate_and_certify_given_gradient(problem, w, epsilon, m_bound, g);
    if certified {
        let mut portfolio = portfolio;
        portfolio.certified_gap = Some(tol);
        return Some(portfolio);
    }
    if epsilon_optimal_given_gradient(problem, w, tol, g) {
        return Some(Portfolio::from_dense(w, Some(tol)));
    }
    None
}

/// Objective value from a precomputed gradient:
/// `Ψ(w) = ½(wᵀg − μ̂ᵀw) + Σ β_i|w_i|` since `g = 2Rw − μ̂`.
pub(crate) fn objective_given_gradient(
    problem: &Problem,
    w: &DVector<f64>,
    g: &DVector<f64>,
) -> f64 {
    let mut smooth = 0.0;
    let mut l1 = 0.0;
    let mu = problem.mu();
    let beta = problem.beta();
    for i in 0..problem.n() {
        smooth += w[i] * (g[i] - mu[i]);
        l1 += beta[i] * w[i].abs();
    }
    0.5 * smooth + l1
}

/// Certificates need `α_o > 0`; every iterative solver checks this once up
/// front so failures surface as configuration errors, not non-convergence.
pub(crate) fn require_positive_alpha(problem: &Problem) -> Result<()> {
    if problem.alpha_o() > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(
            "iterative solvers require every alpha_i > 0 so the optimality \
             certificate is applicable; raise the alpha floor"
                .into(),
        ))
    }
}
