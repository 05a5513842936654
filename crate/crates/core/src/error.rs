//! Error types shared across the library.

use thiserror::Error;

/// Errors produced by estimation, calibration, solvers, and backtesting.
#[derive(Debug, Error)]
pub enum Error {
    /// Two inputs that must agree in size do not.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An estimator or statistic needs more observations than were supplied.
    #[error("insufficient data: need at least {required} observations, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Input data violates a structural requirement (non-finite entries,
    /// asymmetric matrices, negative penalties, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A matrix factorization or linear solve failed.
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    /// A problem exceeds a hard combinatorial size limit.
    #[error("problem too large: limit is {limit}, got {actual}")]
    ProblemTooLarge { limit: usize, actual: usize },

    /// An iterative solver exhausted its iteration budget without producing
    /// a certified solution. The best iterate reached is reported so callers
    /// can inspect how close the run came.
    #[error(
        "solver failed to certify within {iterations} iterations \
         (best objective {best_objective:.6e})"
    )]
    NonConvergence {
        iterations: usize,
        best_objective: f64,
        best_iterate: Vec<f64>,
    },

    /// A return series has zero variance, so scale-normalized statistics
    /// (e.g. the Sharpe ratio) are undefined.
    #[error("degenerate return series: zero variance over {periods} periods")]
    DegenerateSeries { periods: usize },

    /// An error that occurred while processing one backtest window.
    #[error("backtest window {window}: {source}")]
    BacktestWindow {
        window: usize,
        #[source]
        source: Box<Error>,
    },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
