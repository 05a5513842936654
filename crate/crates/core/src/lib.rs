//! Sparse mean-variance portfolio selection.
//!
//! This crate estimates return moments with shrinkage, calibrates
//! per-asset elastic-net penalty weights from bootstrap error quantiles,
//! and minimizes the penalized objective
//!
//! ```text
//! Ψ(w) = wᵀΓ̂w − wᵀμ̂ + Σᵢ βᵢ|wᵢ| + Σᵢ αᵢwᵢ²
//! ```
//!
//! with Bregman-splitting solvers that stop on a computable optimality
//! certificate, so every returned portfolio carries a proven bound on its
//! objective gap. A rolling-window backtest harness compares penalized
//! and unpenalized portfolios out of sample.
//!
//! Module map:
//!
//! - [`estimation`]: shrinkage estimators for the mean and covariance.
//! - [`calibration`]: bootstrap quantile calibration of penalty weights.
//! - [`objective`]: the penalized objective, its gradient, and optimality
//!   certificates.
//! - [`solvers`]: Bregman splitting, its adaptive-support variant, a
//!   proximal-gradient baseline, and a small exhaustive oracle.
//! - [`backtest`]: rolling-window out-of-sample evaluation.
//! - [`synthetic`]: seeded random instances with planted sparse optima.

pub mod backtest;
pub mod calibration;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod objective;
pub mod solvers;
pub mod synthetic;
pub mod types;

pub use error::{Error, Result};
pub use types::{Portfolio, ReturnMatrix};
