//! The penalized objective, its robust-optimization twin, and optimality
//! certificates.
//!
//! The central object is [`Problem`]: minimize
//!
//! ```text
//! Ψ(w) = wᵀΓ̂w − wᵀμ̂ + Σ_i β_i|w_i| + Σ_i α_i w_i²
//!      = wᵀRw − wᵀμ̂ + Σ_i β_i|w_i|,       R = Γ̂ + diag(α).
//! ```
//!
//! Three certificates grade a candidate `w`:
//! * [`check_exact_optimality`] — the subgradient conditions that hold at
//!   the optimum and nowhere else, up to an explicit floating-point slack;
//! * [`check_epsilon_optimality`] — a relaxation whose satisfaction proves
//!   `Ψ(w) ≤ Ψ(w*) + ε`, requiring exact zeros off the support;
//! * [`truncate_and_certify`] — the practical variant: entries below a
//!   data-driven threshold η are treated as zero, and a true result proves
//!   an `((√2+1)²/2)·ε` gap for the truncated vector.

use nalgebra::{DMatrix, DVector};

use crate::calibration::PenaltyWeights;
use crate::error::{Error, Result};
use crate::linalg;
use crate::types::Portfolio;

/// Gap multiplier of the truncating certificate: `(√2+1)²/2`.
pub fn truncation_gap_factor() -> f64 {
    1.5 + std::f64::consts::SQRT_2
}

/// Sign with `sgn(0) = 0`; support membership is exact-zero-based.
#[inline]
pub(crate) fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// An immutable penalized mean-variance problem instance.
///
/// Construction validates shapes and penalty signs, caches the effective
/// quadratic form `R = Γ̂ + diag(α)`, the smallest ℓ2 weight `α_o`, and
/// power-iteration bounds on `‖R‖₂`. Shareable across threads.
#[derive(Debug, Clone)]
pub struct Problem {
    gamma: DMatrix<f64>,
    mu: DVector<f64>,
    alpha: DVector<f64>,
    beta: DVector<f64>,
    r: DMatrix<f64>,
    alpha_o: f64,
    /// Power-iteration estimate of ‖R‖₂; converges to it from below.
    spectral_lower: f64,
    /// The estimate with 1% padding; treated as an upper bound on ‖R‖₂.
    spectral_padded: f64,
}

impl Problem {
    /// Builds a problem from a covariance estimate, mean estimate, and
    /// per-asset penalty weights.
    ///
    /// `gamma` must be square and symmetric; `alpha` and `beta` must be
    /// non-negative and finite. A zero `alpha` is accepted here (the
    /// exact-optimality certificate is still meaningful) but the iterative
    /// solvers and gap certificates require `min α_i > 0`.
    pub fn new(
        gamma: DMatrix<f64>,
        mu: DVector<f64>,
        alpha: DVector<f64>,
        beta: DVector<f64>,
    ) -> Result<Self> {
        let n = gamma.nrows();
        if n == 0 {
            return Err(Error::InvalidInput(
                "problem must have at least one asset".into(),
            ));
        }
        let gamma = linalg::require_symmetric(&gamma, "covariance")?;
        for (name, v) in [("mu", &mu), ("alpha", &alpha), ("beta", &beta)] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "problem vectors",
                    expected: n,
                    actual: v.len(),
                });
            }
            if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} contains a non-finite entry ({x})"
                )));
            }
        }
        for (name, v) in [("alpha", &alpha), ("beta", &beta)] {
            if let Some((i, &x)) = v.iter().enumerate().find(|(_, &x)| x < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name}[{i}] must be non-negative, got {x}"
                )));
            }
        }
        let mut r = gamma.clone();
        for i in 0..n {
            r[(i, i)] += alpha[i];
        }
        let alpha_o = alpha.min();
        let (spectral_lower, spectral_padded) = linalg::spectral_norm_bounds(&r);
        Ok(Self {
            gamma,
            mu,
            alpha,
            beta,
            r,
            alpha_o,
            spectral_lower,
            spectral_padded,
        })
    }

    /// Builds a problem from calibrated penalty weights.
    pub fn from_weights(
        gamma: DMatrix<f64>,
        mu: DVector<f64>,
        weights: &PenaltyWeights,
    ) -> Result<Self> {
        Self::new(gamma, mu, weights.alpha.clone(), weights.beta.clone())
    }

    /// Number of assets.
    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// Covariance estimate Γ̂.
    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    /// Mean estimate μ̂.
    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    /// ℓ2 penalty weights α.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// ℓ1 penalty weights β.
    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    /// Effective quadratic form `R = Γ̂ + diag(α)`.
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Smallest ℓ2 weight; a lower bound on R's spectrum when Γ̂ is PSD.
    pub fn alpha_o(&self) -> f64 {
        self.alpha_o
    }

    /// Power-iteration estimate of `‖R‖₂` (approaches it from below).
    pub fn spectral_lower(&self) -> f64 {
        self.spectral_lower
    }

    /// Default curvature constant for certificates and step sizes:
    /// `2 × padded ‖R‖₂ estimate`, an upper bound on `2‖R‖₂`.
    pub fn default_m_bound(&self) -> f64 {
        2.0 * self.spectral_padded
    }

    /// Default slack for [`check_exact_optimality`]:
    /// `1e-9 · (1 + ‖μ̂‖∞)`.
    pub fn default_slack(&self) -> f64 {
        1e-9 * (1.0 + self.mu.amax())
    }

    /// The penalized objective
    /// `Ψ(w) = wᵀΓ̂w − wᵀμ̂ + Σβ_i|w_i| + Σα_i w_i²`.
    ///
    /// Panics if `w` has the wrong length.
    pub fn objective(&self, w: &DVector<f64>) -> f64 {
        assert_eq!(w.len(), self.n(), "weight vector length");
        let quad = (&self.gamma * w).dot(w);
        let mut penalties = 0.0;
        for i in 0..self.n() {
            penalties += self.beta[i] * w[i].abs() + self.alpha[i] * w[i] * w[i];
        }
        quad - self.mu.dot(w) + penalties
    }

    /// The same objective through the cached quadratic form:
    /// `wᵀRw − wᵀμ̂ + Σβ_i|w_i|`. Algebraically identical to
    /// [`Self::objective`]; exposed so tests can confirm the identity.
    pub fn objective_via_r(&self, w: &DVector<f64>) -> f64 {
        assert_eq!(w.len(), self.n(), "weight vector length");
        let quad = (&self.r * w).dot(w);
        let l1: f64 = (0..self.n()).map(|i| self.beta[i] * w[i].abs()).sum();
        quad - self.mu.dot(w) + l1
    }

    /// Gradient of the smooth part: `g = 2Rw − μ̂`.
    ///
    /// Panics if `w` has the wrong length.
    pub fn smooth_gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        assert_eq!(w.len(), self.n(), "weight vector length");
        &self.r * w * 2.0 - &self.mu
    }

    /// Restriction of the problem to `indices` (strictly increasing).
    ///
    /// The restricted problem reuses the parent's `α_o` and spectral
    /// bounds: the parent `α_o` still lower-bounds every α entry kept, so
    /// gap certificates computed on the restriction remain valid bounds for
    /// the full problem, and a principal submatrix's spectral norm never
    /// exceeds the parent's.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let m = indices.len();
        if m == 0 {
            return Err(Error::InvalidInput(
                "restriction needs at least one index".into(),
            ));
        }
        for pair in indices.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidInput(
                    "restriction indices must be strictly increasing".into(),
                ));
            }
        }
        if *indices.last().unwrap() >= self.n() {
            return Err(Error::DimensionMismatch {
                context: "restriction indices",
                expected: self.n(),
                actual: *indices.last().unwrap() + 1,
            });
        }
        let gamma = DMatrix::from_fn(m, m, |a, b| self.gamma[(indices[a], indices[b])]);
        let mu = DVector::from_fn(m, |a, _| self.mu[indices[a]]);
        let alpha = DVector::from_fn(m, |a, _| self.alpha[indices[a]]);
        let beta = DVector::from_fn(m, |a, _| self.beta[indices[a]]);
        let mut r = gamma.clone();
        for a in 0..m {
            r[(a, a)] += alpha[a];
        }
        Ok(Self {
            gamma,
            mu,
            alpha,
            beta,
            r,
            alpha_o: self.alpha_o,
            spectral_lower: self.spectral_lower,
            spectral_padded: self.spectral_padded,
        })
    }
}

/// A symmetric, entrywise non-negative, diagonally dominant matrix bounding
/// the entrywise covariance uncertainty of the robust problem.
#[derive(Debug, Clone)]
pub struct UncertaintyMatrix {
    delta: DMatrix<f64>,
}

impl UncertaintyMatrix {
    /// Validates symmetry, non-negativity, and diagonal dominance
    /// (`Δ_ii ≥ Σ_{j≠i} Δ_ij`).
    pub fn new(delta: DMatrix<f64>) -> Result<Self> {
        let delta = linalg::require_symmetric(&delta, "uncertainty matrix")?;
        let n = delta.nrows();
        for i in 0..n {
            for j in 0..n {
                if delta[(i, j)] < 0.0 || !delta[(i, j)].is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "uncertainty matrix entry ({i},{j}) must be finite and >= 0, got {}",
                        delta[(i, j)]
                    )));
                }
            }
        }
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| delta[(i, j)]).sum();
            if delta[(i, i)] + 1e-12 * (1.0 + off) < off {
                return Err(Error::InvalidInput(format!(
                    "uncertainty matrix is not diagonally dominant at row {i}: \
                     diagonal {} < off-diagonal sum {off}",
                    delta[(i, i)]
                )));
            }
        }
        Ok(Self { delta })
    }

    /// The diagonal uncertainty matrix `diag(α)`.
    pub fn from_alpha(alpha: &DVector<f64>) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(alpha))
    }

    /// The validated matrix.
    pub fn delta(&self) -> &DMatrix<f64> {
        &self.delta
    }
}

/// Worst-case objective of the robust problem in closed form:
/// `wᵀΓ̂w − wᵀμ̂ + |w|ᵀΔ|w| + Σβ_i|w_i|`.
///
/// This is the inner maximum over covariance perturbations `|e_ij| ≤ Δ_ij`
/// and mean perturbations `|c_i| ≤ β_i` applied to the plain mean-variance
/// value. With `Δ = diag(α)` it coincides with [`Problem::objective`].
pub fn robust_objective(
    gamma: &DMatrix<f64>,
    mu: &DVector<f64>,
    beta: &DVector<f64>,
    delta: &UncertaintyMatrix,
    w: &DVector<f64>,
) -> Result<f64> {
    let n = gamma.nrows();
    if delta.delta().nrows() != n || mu.len() != n || beta.len() != n || w.len() != n {
        return Err(Error::DimensionMismatch {
            context: "robust objective inputs",
            expected: n,
            actual: w.len(),
        });
    }
    let abs_w = w.abs();
    let quad = (gamma * w).dot(w);
    let uncertainty = (delta.delta() * &abs_w).dot(&abs_w);
    let l1: f64 = (0..n).map(|i| beta[i] * abs_w[i]).sum();
    Ok(quad - mu.dot(w) + uncertainty + l1)
}

/// The smoothly clipped absolute deviation penalty:
///
/// ```text
/// λ|x|                              if |x| ≤ λ
/// −(x² − 2aλ|x| + λ²) / (2(a − 1))  if λ < |x| ≤ aλ
/// (a + 1)λ²/2                       if |x| > aλ
/// ```
///
/// Requires `lambda > 0` and `a_scad > 2`.
pub fn scad_penalty(x: f64, lambda: f64, a_scad: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "scad lambda must be finite and > 0, got {lambda}"
        )));
    }
    if !(a_scad > 2.0 && a_scad.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "scad a must be finite and > 2, got {a_scad}"
        )));
    }
    let ax = x.abs();
    let value = if ax <= lambda {
        lambda * ax
    } else if ax <= a_scad * lambda {
        -(ax * ax - 2.0 * a_scad * lambda * ax + lambda * lambda) / (2.0 * (a_scad - 1.0))
    } else {
        (a_scad + 1.0) * lambda * lambda / 2.0
    };
    Ok(value)
}

/// Which optimality condition a coordinate violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Off-support gradient left the band `[−β_i, β_i]`.
    OffSupportBand,
    /// On-support stationarity residual `g_i + β_i·sgn(w_i)` is too large.
    SupportStationarity,
}

/// A single violated optimality condition.
#[derive(Debug, Clone)]
pub struct OptimalityViolation {
    pub index: usize,
    pub kind: ViolationKind,
    /// How far past the allowed bound the condition is.
    pub excess: f64,
}

/// Result of the exact-optimality check with per-index diagnostics.
#[derive(Debug, Clone)]
pub struct OptimalityReport {
    pub optimal: bool,
    pub violations: Vec<OptimalityViolation>,
}

/// Checks the exact subgradient optimality conditions up to `slack`:
/// `|g_i| ≤ β_i + slack` off the support and `|g_i + β_i·sgn(w_i)| ≤ slack`
/// on it, where `g = 2Rw − μ̂`. Every violating index is reported.
pub fn check_exact_optimality(
    problem: &Problem,
    w: &DVector<f64>,
    slack: f64,
) -> Result<OptimalityReport> {
    if slack.is_nan() || slack < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "slack must be >= 0, got {slack}"
        )));
    }
    let g = problem.smooth_gradient(w);
    let beta = problem.beta();
    let mut violations = Vec::new();
    for i in 0..problem.n() {
        if w[i] == 0.0 {
            let excess = g[i].abs() - beta[i] - slack;
            if excess > 0.0 {
                violations.push(OptimalityViolation {
                    index: i,
                    kind: ViolationKind::OffSupportBand,
                    excess,
                });
            }
        } else {
            let excess = (g[i] + beta[i] * sgn(w[i])).abs() - slack;
            if excess > 0.0 {
                violations.push(OptimalityViolation {
                    index: i,
                    kind: ViolationKind::SupportStationarity,
                    excess,
                });
            }
        }
    }
    Ok(OptimalityReport {
        optimal: violations.is_empty(),
        violations,
    })
}

/// ε-optimality certificate on the exact support: true iff
/// `Σ_{i∈supp(w)} (g_i + β_i·sgn(w_i))² ≤ 2ε·α_o` and `|g_i| ≤ β_i` for all
/// `i ∉ supp(w)`. A true result proves `Ψ(w) ≤ Ψ(w*) + ε`.
pub fn check_epsilon_optimality(problem: &Problem, w: &DVector<f64>, epsilon: f64) -> Result<bool> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be finite and > 0, got {epsilon}"
        )));
    }
    let g = problem.smooth_gradient(w);
    Ok(epsilon_optimal_given_gradient(problem, w, epsilon, &g))
}

/// [`check_epsilon_optimality`] with a precomputed gradient `g = 2Rw − μ̂`,
/// so solver loops can share one matrix-vector product per iteration.
pub(crate) fn epsilon_optimal_given_gradient(
    problem: &Problem,
    w: &DVector<f64>,
    epsilon: f64,
    g: &DVector<f64>,
) -> bool {
    let beta = problem.beta();
    let mut residual_sq = 0.0;
    for i in 0..problem.n() {
        if w[i] == 0.0 {
            if g[i].abs() > beta[i] {
                return false;
            }
        } else {
            let r = g[i] + beta[i] * sgn(w[i]);
            residual_sq += r * r;
        }
    }
    residual_sq <= 2.0 * epsilon * problem.alpha_o()
}

/// Practical certificate that tolerates near-zero entries.
///
/// Entries with `0 < |w_i| < η`, where
/// `η = ½·min(ε, √(ε·α_o)) / (√N · m_bound)`, are graded as if they were
/// zero. The certificate holds iff the stationarity residuals over the
/// remaining support satisfy `Σ (g_i + β_i·sgn(w_i))² ≤ 2ε·α_o` and every
/// near-zero or off-support coordinate obeys the tightened band
/// `−β_i + ε ≤ g_i ≤ β_i − ε`. On success the returned portfolio is `w`
/// with the near-zero entries set exactly to zero and a certified gap of
/// `((√2+1)²/2)·ε`; on failure it is `w` unchanged and uncertified.
///
/// `m_bound` must be an upper bound on `2‖R‖₂` (the cached power-iteration
/// lower estimate cheaply rejects values that are certainly too small), and
/// the certificate requires `α_o > 0`.
pub fn truncate_and_certify(
    problem: &Problem,
    w: &DVector<f64>,
    epsilon: f64,
    m_bound: f64,
) -> Result<(Portfolio, bool)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be finite and > 0, got {epsilon}"
        )));
    }
    if problem.alpha_o() <= 0.0 {
        return Err(Error::InvalidConfig(
            "truncating certificate requires every alpha_i > 0".into(),
        ));
    }
    if !(m_bound.is_finite() && m_bound > 0.0) || m_bound < 2.0 * problem.spectral_lower() {
        return Err(Error::InvalidConfig(format!(
            "m_bound ({m_bound}) must be finite and at least twice the spectral norm \
             (power-iteration estimate {:.6e})",
            problem.spectral_lower()
        )));
    }
    let g = problem.smooth_gradient(w);
    Ok(truncate_and_certify_given_gradient(
        problem, w, epsilon, m_bound, &g,
    ))
}

/// [`truncate_and_certify`] with a precomputed gradient `g = 2Rw − μ̂` and
/// preconditions already validated, for use inside solver iterations.
pub(crate) fn truncate_and_certify_given_gradient(
    problem: &Problem,
    w: &DVector<f64>,
    epsilon: f64,
    m_bound: f64,
    g: &DVector<f64>,
) -> (Portfolio, bool) {
    let n = problem.n();
    let alpha_o = problem.alpha_o();
    let eta = 0.5 * epsilon.min((epsilon * alpha_o).sqrt()) / ((n as f64).sqrt() * m_bound);

    let beta = problem.beta();
    let mut residual_sq = 0.0;
    let mut band_ok = true;
    for i in 0..n {
        if w[i] != 0.0 && w[i].abs() >= eta {
            let r = g[i] + beta[i] * sgn(w[i]);
            residual_sq += r * r;
        } else if !(-beta[i] + epsilon <= g[i] && g[i] <= beta[i] - epsilon) {
            band_ok = false;
            break;
        }
    }
    let certified = band_ok && residual_sq <= 2.0 * epsilon * alpha_o;
    if certified {
        let zeta = DVector::from_fn(n, |i, _| if w[i].abs() >= eta { w[i] } else { 0.0 });
        let gap = truncation_gap_factor() * epsilon;
        (Portfolio::from_dense(&zeta, Some(gap)), true)
    } else {
        (Portfolio::from_dense(w, None), false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn scalar_problem(gamma: f64, mu: f64, alpha: f64, beta: f64) -> Problem {
        Problem::new(
            DMatrix::from_element(1, 1, gamma),
            DVector::from_element(1, mu),
            DVector::from_element(1, alpha),
            DVector::from_element(1, beta),
        )
        .unwrap()
    }

    fn random_problem(n: usize, seed: u64) -> Problem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let gamma = &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.05;
        let mu = DVector::from_fn(n, |_, _| 2.0 * (rng.random::<f64>() - 0.5));
        let alpha = DVector::from_fn(n, |_, _| 0.001 + rng.random::<f64>());
        let beta = DVector::from_fn(n, |_, _| rng.random::<f64>());
        Problem::new(gamma, mu, alpha, beta).unwrap()
    }

    #[test]
    fn objective_zero_vector_is_zero() {
        let p = random_problem(5, 0);
        assert_eq!(p.objective(&DVector::zeros(5)), 0.0);
    }

    #[test]
    fn objective_scalar_hand_worked() {
        // 1 − 1 + 0.5 + 0.5 = 1.
        let p = scalar_problem(1.0, 1.0, 0.5, 0.5);
        let w = DVector::from_element(1, 1.0);
        assert_relative_eq!(p.objective(&w), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn objective_two_routes_agree() {
        for seed in 0..20 {
            let p = random_problem(6, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
            let w = DVector::from_fn(6, |_, _| 4.0 * (rng.random::<f64>() - 0.5));
            let a = p.objective(&w);
            let b = p.objective_via_r(&w);
            assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_at_zero_is_negative_mu() {
        let p = random_problem(4, 2);
        let g = p.smooth_gradient(&DVector::zeros(4));
        assert_relative_eq!(g, -p.mu().clone(), epsilon = 1e-15);
    }

    #[test]
    fn gradient_scalar_hand_worked() {
        // R = 1.5 + 0.5 = 2; g = 2·2·3 − 1 = 11.
        let p = scalar_problem(1.5, 1.0, 0.5, 0.0);
        let g = p.smooth_gradient(&DVector::from_element(1, 3.0));
        assert_relative_eq!(g[0], 11.0, epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let p = random_problem(8, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let w = DVector::from_fn(8, |_, _| 2.0 * (rng.random::<f64>() - 0.5));
        let g = p.smooth_gradient(&w);
        let smooth = |v: &DVector<f64>| (p.r() * v).dot(v) - p.mu().dot(v);
        let h = 1e-5;
        for i in 0..8 {
            let mut hi = w.clone();
            let mut lo = w.clone();
            hi[i] += h;
            lo[i] -= h;
            let fd = (smooth(&hi) - smooth(&lo)) / (2.0 * h);
            assert!(
                (g[i] - fd).abs() <= 1e-6,
                "coordinate {i}: analytic {} vs finite difference {fd}",
                g[i]
            );
        }
    }

    #[test]
    fn robust_objective_with_diagonal_alpha_equals_penalized_objective() {
        for seed in 0..25 {
            let p = random_problem(5, seed);
            let delta = UncertaintyMatrix::from_alpha(p.alpha()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 500);
            let w = DVector::from_fn(5, |_, _| 3.0 * (rng.random::<f64>() - 0.5));
            let robust = robust_objective(p.gamma(), p.mu(), p.beta(), &delta, &w).unwrap();
            let plain = p.objective(&w);
            assert_relative_eq!(robust, plain, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn robust_objective_no_uncertainty_is_plain_mean_variance() {
        let p = random_problem(3, 7);
        let delta = UncertaintyMatrix::new(DMatrix::zeros(3, 3)).unwrap();
        let beta = DVector::zeros(3);
        let w = DVector::from_column_slice(&[0.5, -0.25, 1.0]);
        let value = robust_objective(p.gamma(), p.mu(), &beta, &delta, &w).unwrap();
        let expected = (p.gamma() * &w).dot(&w) - p.mu().dot(&w);
        assert_relative_eq!(value, expected, epsilon = 1e-14);
    }

    #[test]
    fn robust_objective_pairwise_hand_worked() {
        // wᵀΓ̂w = 2 plus |w|ᵀΔ|w| = 2+1+1+2 = 6 gives 8.
        let gamma = DMatrix::identity(2, 2);
        let mu = DVector::zeros(2);
        let beta = DVector::zeros(2);
        let delta =
            UncertaintyMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let w = DVector::from_column_slice(&[1.0, -1.0]);
        let value = robust_objective(&gamma, &mu, &beta, &delta, &w).unwrap();
        assert_relative_eq!(value, 8.0, epsilon = 1e-14);
    }

    /// Brute-force inner maximum over the sign corners of both uncertainty
    /// sets. Covariance perturbations are symmetric with |e_ij| ≤ Δ_ij;
    /// mean perturbations have |c_i| ≤ β_i. The maximum of a linear
    /// function of (e, c) is attained at a corner, so enumerating corners
    /// is exact.
    fn corner_maximum(
        gamma: &DMatrix<f64>,
        mu: &DVector<f64>,
        beta: &DVector<f64>,
        delta: &DMatrix<f64>,
        w: &DVector<f64>,
    ) -> f64 {
        let n = gamma.nrows();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let mut best = f64::NEG_INFINITY;
        for e_mask in 0u32..(1 << pairs.len()) {
            let mut e = DMatrix::zeros(n, n);
            for (bit, &(i, j)) in pairs.iter().enumerate() {
                let sign = if e_mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
                e[(i, j)] = sign * delta[(i, j)];
                e[(j, i)] = sign * delta[(i, j)];
            }
            let quad = ((gamma + &e) * w).dot(w);
            for c_mask in 0u32..(1 << n) {
                let mut linear = 0.0;
                for i in 0..n {
                    let sign = if c_mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                    linear += (mu[i] + sign * beta[i]) * w[i];
                }
                best = best.max(quad - linear);
            }
        }
        best
    }

    #[test]
    fn robust_objective_matches_exhaustive_corner_maximum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for n in 1..=3usize {
            for _ in 0..40 {
                let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
                let gamma = &a * a.transpose();
                let mu = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
                let beta = DVector::from_fn(n, |_, _| rng.random::<f64>());
                // Build a diagonally dominant, non-negative Δ.
                let mut delta = DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        0.0
                    } else {
                        0.3 * rng.random::<f64>()
                    }
                });
                delta = (&delta + delta.transpose()) * 0.5;
                for i in 0..n {
                    let off: f64 = (0..n).filter(|&j| j != i).map(|j| delta[(i, j)]).sum();
                    delta[(i, i)] = off + rng.random::<f64>();
                }
                let w = DVector::from_fn(n, |_, _| 2.0 * (rng.random::<f64>() - 0.5));
                let um = UncertaintyMatrix::new(delta.clone()).unwrap();
                let closed = robust_objective(&gamma, &mu, &beta, &um, &w).unwrap();
                let brute = corner_maximum(&gamma, &mu, &beta, &delta, &w);
                assert_relative_eq!(closed, brute, max_relative = 1e-10, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn uncertainty_matrix_rejects_bad_inputs() {
        // Negative entry.
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, -0.1, -0.1, 1.0]);
        assert!(UncertaintyMatrix::new(neg).is_err());
        // Not diagonally dominant.
        let weak_diag = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 0.5]);
        assert!(UncertaintyMatrix::new(weak_diag).is_err());
        // Asymmetric.
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.4, 1.0]);
        assert!(UncertaintyMatrix::new(asym).is_err());
    }

    #[test]
    fn scad_tabulated_values() {
        assert_relative_eq!(scad_penalty(0.5, 1.0, 3.7).unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(scad_penalty(10.0, 1.0, 3.7).unwrap(), 2.35, epsilon = 1e-12);
        assert_relative_eq!(
            scad_penalty(2.0, 1.0, 3.7).unwrap(),
            9.8 / 5.4,
            epsilon = 1e-12
        );
    }

    #[test]
    fn scad_continuous_at_branch_points() {
        for &(lambda, a) in &[(1.0, 3.7), (0.3, 2.5), (2.0, 5.0)] {
            // First joint |x| = λ: linear branch value vs quadratic branch
            // formula evaluated at the same point.
            let linear = lambda * lambda;
            let quad_at_lambda = -(lambda * lambda - 2.0 * a * lambda * lambda + lambda * lambda)
                / (2.0 * (a - 1.0));
            assert_relative_eq!(linear, quad_at_lambda, epsilon = 1e-12);
            // Second joint |x| = aλ: quadratic branch vs constant branch.
            let x = a * lambda;
            let quad_at_a_lambda =
                -(x * x - 2.0 * a * lambda * x + lambda * lambda) / (2.0 * (a - 1.0));
            let constant = (a + 1.0) * lambda * lambda / 2.0;
            assert_relative_eq!(quad_at_a_lambda, constant, epsilon = 1e-12);
            // And the function itself agrees with both one-sided formulas.
            assert_relative_eq!(
                scad_penalty(lambda, lambda, a).unwrap(),
                linear,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                scad_penalty(x, lambda, a).unwrap(),
                constant,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn scad_rejects_bad_parameters() {
        assert!(scad_penalty(1.0, 0.0, 3.7).is_err());
        assert!(scad_penalty(1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn exact_optimality_scalar_soft_threshold() {
        // w* = (μ̂ − β)/(2(Γ̂ + α)) = (2 − 1)/2 = 0.5 at α = 0.
        let p = scalar_problem(1.0, 2.0, 0.0, 1.0);
        let report = check_exact_optimality(&p, &DVector::from_element(1, 0.5), 1e-12).unwrap();
        assert!(report.optimal, "violations: {:?}", report.violations);
    }

    #[test]
    fn exact_optimality_zero_rule() {
        let gamma = DMatrix::identity(2, 2);
        let mu = DVector::from_column_slice(&[0.4, -0.3]);
        let alpha = DVector::from_element(2, 0.1);
        let covered = Problem::new(
            gamma.clone(),
            mu.clone(),
            alpha.clone(),
            DVector::from_column_slice(&[0.5, 0.5]),
        )
        .unwrap();
        let report = check_exact_optimality(&covered, &DVector::zeros(2), 0.0).unwrap();
        assert!(report.optimal);

        let uncovered =
            Problem::new(gamma, mu, alpha, DVector::from_column_slice(&[0.5, 0.2])).unwrap();
        let report = check_exact_optimality(&uncovered, &DVector::zeros(2), 0.0).unwrap();
        assert!(!report.optimal);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].index, 1);
        assert_eq!(report.violations[0].kind, ViolationKind::OffSupportBand);
    }

    #[test]
    fn epsilon_certificate_boundary_is_sharp() {
        // Scalar instance with α = 0.5: residual at w* + δ is 2Rδ = 3δ.
        // The certificate at level ε accepts exactly (3δ)² ≤ 2ε·α_o = ε.
        let p = scalar_problem(1.0, 2.0, 0.5, 1.0);
        let w_star = (2.0 - 1.0) / (2.0 * 1.5);
        let eps = 1e-6f64;
        let delta_exact = eps.sqrt() / 3.0;
        let at_boundary = DVector::from_element(1, w_star + delta_exact * (1.0 - 1e-12));
        let beyond = DVector::from_element(1, w_star + delta_exact * (1.0 + 1e-9));
        assert!(check_epsilon_optimality(&p, &at_boundary, eps).unwrap());
        assert!(!check_epsilon_optimality(&p, &beyond, eps).unwrap());
    }

    #[test]
    fn epsilon_certificate_rejects_off_support_violation() {
        let p = random_problem(4, 11);
        // w = 0 with some |μ̂_i| > β_i must fail for every ε.
        let mut mu = p.mu().clone();
        mu[0] = p.beta()[0] + 1.0;
        let p2 = Problem::new(p.gamma().clone(), mu, p.alpha().clone(), p.beta().clone()).unwrap();
        assert!(!check_epsilon_optimality(&p2, &DVector::zeros(4), 1e3).unwrap());
    }

    #[test]
    fn truncating_certificate_zeroes_spurious_small_entry() {
        // Scalar-decoupled 3-asset instance: diagonal Γ̂, so each optimum is
        // the scalar soft threshold. Coordinate 2 has |μ̂| < β → w* = 0.
        let gamma = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 1.0, 1.0]));
        let alpha = DVector::from_column_slice(&[0.5, 0.5, 0.5]);
        let beta = DVector::from_column_slice(&[1.0, 1.0, 1.0]);
        let mu = DVector::from_column_slice(&[2.0, -3.0, 0.2]);
        let p = Problem::new(gamma, mu, alpha, beta).unwrap();
        let w1 = (2.0 - 1.0) / 3.0;
        let w2 = -(3.0 - 1.0) / 3.0;

        let eps = 1e-8f64;
        let m = p.default_m_bound();
        let eta = 0.5 * eps.min((eps * 0.5).sqrt()) / (3.0_f64.sqrt() * m);
        let w = DVector::from_column_slice(&[w1, w2, eta / 2.0]);
        let (portfolio, certified) = truncate_and_certify(&p, &w, eps, m).unwrap();
        assert!(certified);
        assert_eq!(portfolio.support, vec![0, 1]);
        assert_eq!(portfolio.weights[2], 0.0);
        assert_relative_eq!(
            portfolio.certified_gap.unwrap(),
            truncation_gap_factor() * eps,
            epsilon = 1e-20
        );
    }

    #[test]
    fn truncating_certificate_requires_band_margin() {
        // Put a small entry at a coordinate whose gradient sits exactly on
        // the band edge g = β: the tightened band needs an ε margin, so
        // certification must fail.
        let gamma = DMatrix::identity(2, 2);
        let alpha = DVector::from_element(2, 0.5);
        let beta = DVector::from_column_slice(&[1.0, 0.4]);
        // Coordinate 1 at w = 0 has g = −μ̂; pick μ̂[1] = −β[1] so g = β.
        let mu = DVector::from_column_slice(&[2.0, -0.4]);
        let p = Problem::new(gamma, mu, alpha, beta).unwrap();
        let w_star0 = (2.0 - 1.0) / 3.0;
        let m = p.default_m_bound();
        let eps = 1e-8f64;
        let eta = 0.5 * eps.min((eps * 0.5).sqrt()) / (2.0_f64.sqrt() * m);
        let w = DVector::from_column_slice(&[w_star0, eta / 2.0]);
        let (portfolio, certified) = truncate_and_certify(&p, &w, eps, m).unwrap();
        assert!(!certified);
        // Failure leaves the iterate untouched.
        assert_eq!(portfolio.weights, w.iter().copied().collect::<Vec<_>>());
        assert!(portfolio.certified_gap.is_none());
    }

    #[test]
    fn truncating_certificate_accepts_exact_optimum() {
        let p = scalar_problem(1.0, 2.0, 0.5, 1.0);
        let w = DVector::from_element(1, (2.0 - 1.0) / 3.0);
        let (portfolio, certified) =
            truncate_and_certify(&p, &w, 1e-9, p.default_m_bound()).unwrap();
        assert!(certified);
        assert_eq!(portfolio.support, vec![0]);
    }

    #[test]
    fn truncating_certificate_rejects_understated_m_bound() {
        let p = random_problem(5, 13);
        let too_small = 0.5 * p.spectral_lower();
        let err = truncate_and_certify(&p, &DVector::zeros(5), 1e-8, too_small).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn restrict_preserves_entries_and_global_floor() {
        let p = random_problem(6, 17);
        let sub = p.restrict(&[1, 3, 4]).unwrap();
        assert_eq!(sub.n(), 3);
        assert_eq!(sub.gamma()[(0, 1)], p.gamma()[(1, 3)]);
        assert_eq!(sub.mu()[2], p.mu()[4]);
        assert_eq!(sub.alpha_o(), p.alpha_o());
        assert_eq!(sub.r()[(1, 1)], p.r()[(3, 3)]);
    }

    #[test]
    fn restrict_rejects_unsorted_or_out_of_range() {
        let p = random_problem(4, 19);
        assert!(p.restrict(&[2, 1]).is_err());
        assert!(p.restrict(&[0, 4]).is_err());
        assert!(p.restrict(&[]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn objective_routes_identity_property(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 1 + (seed as usize % 7);
            let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
            let gamma = &a * a.transpose();
            let mu = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
            let alpha = DVector::from_fn(n, |_, _| rng.random::<f64>());
            let beta = DVector::from_fn(n, |_, _| rng.random::<f64>());
            let p = Problem::new(gamma, mu, alpha, beta).unwrap();
            let w = DVector::from_fn(n, |_, _| 4.0 * (rng.random::<f64>() - 0.5));
            let lhs = p.objective(&w);
            let rhs = p.objective_via_r(&w);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
        }
    }
}
