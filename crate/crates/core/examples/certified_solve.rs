//! Minimal end-to-end library walkthrough: simulate returns, estimate
//! moments, calibrate penalties, and solve with a certified gap. This is
//! the example shown in the repository README.

use sparsemv_core::calibration::{calibrate, CalibrationConfig};
use sparsemv_core::estimation::{estimate, EstimationConfig};
use sparsemv_core::objective::Problem;
use sparsemv_core::solvers::{solve, SolverConfig, SolverKind};
use sparsemv_core::synthetic::synthetic_returns;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let returns = synthetic_returns(50, 504, 7)?;
    let estimates = estimate(&returns, &EstimationConfig::default())?;
    let penalties = calibrate(&returns, &estimates.gamma, &CalibrationConfig::default(), 7)?;
    let problem = Problem::from_weights(estimates.gamma.clone(), estimates.mu.clone(), &penalties)?;
    let portfolio = solve(
        SolverKind::AdaptiveSupport,
        &problem,
        &SolverConfig::with_tol(1e-9),
    )?;
    println!(
        "{} assets held, objective gap <= {:.1e}",
        portfolio.support_size(),
        portfolio.certified_gap.unwrap()
    );
    Ok(())
}
