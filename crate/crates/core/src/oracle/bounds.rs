//! Analytic inequalities and diagnostic constants attached to the LQR
//! optimization landscape: the exact cost-difference expansion, the
//! gradient-domination sandwich, and the bounds that certify the TD operator
//! is well conditioned.

use crate::error::{Error, Result};
use crate::oracle::{evaluate_policy, LqrProblem, PolicyGain};
use nalgebra::DMatrix;

/// The two-sided bound relating optimality gap to natural-gradient energy.
#[derive(Debug, Clone, Copy)]
pub struct DominationBounds {
    /// `sigma_min(D0) |R + B'P_K B|^{-1} Tr(E_K'E_K)`.
    pub lower: f64,
    /// `J(K) - J(K*)`.
    pub gap: f64,
    /// `sigma_min(R)^{-1} |D_K*| Tr(E_K'E_K)`.
    pub upper: f64,
}

impl DominationBounds {
    pub fn holds(&self, slack: f64) -> bool {
        self.lower <= self.gap + slack && self.gap <= self.upper + slack
    }
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    m.singular_values().min()
}

/// Evaluate both sides of the gradient-domination inequality for a gain and
/// the optimal gain. Returns `(lower, gap, upper)`; the caller asserts
/// `lower <= gap <= upper`.
pub fn gradient_domination_bounds(
    prob: &LqrProblem,
    gain: &PolicyGain,
    optimal: &PolicyGain,
) -> Result<DominationBounds> {
    let eval = evaluate_policy(prob, gain)?;
    let opt_eval = evaluate_policy(prob, optimal)?;
    let grad_energy = (eval.natural_grad.transpose() * &eval.natural_grad).trace();
    let curvature = &prob.r().clone() + prob.b().transpose() * &eval.value_matrix * prob.b();
    let lower = min_singular_value(prob.d0()) / spectral_norm(&curvature) * grad_energy;
    let upper = spectral_norm(&opt_eval.state_cov) / min_singular_value(prob.r()) * grad_energy;
    Ok(DominationBounds {
        lower,
        gap: eval.avg_cost - opt_eval.avg_cost,
        upper,
    })
}

/// Relative residual of the exact cost-difference expansion between two
/// stable gains:
///
/// `J(K') - J(K) = -2 Tr(D_K' (K-K')' E_K)
///               + Tr(D_K' (K-K')' (R + B'P_K B)(K-K'))`.
///
/// Zero up to rounding for every stable pair; the return value is
/// `|lhs - rhs| / max(1, |J(K')|, |J(K)|)`.
pub fn almost_smoothness_residual(
    prob: &LqrProblem,
    gain: &PolicyGain,
    other: &PolicyGain,
) -> Result<f64> {
    let eval = evaluate_policy(prob, gain)?;
    let other_eval = evaluate_policy(prob, other)?;
    let diff = gain.matrix() - other.matrix();
    let curvature = prob.r() + prob.b().transpose() * &eval.value_matrix * prob.b();
    let expansion = -2.0 * (&other_eval.state_cov * diff.transpose() * &eval.natural_grad).trace()
        + (&other_eval.state_cov * diff.transpose() * curvature * &diff).trace();
    let lhs = other_eval.avg_cost - eval.avg_cost;
    let scale = lhs.abs().max(eval.avg_cost.abs()).max(1.0);
    Ok((lhs - expansion).abs() / scale)
}

/// Diagnostic constants from the convergence analysis, evaluated with every
/// norm-equivalence constant set to one. They certify orders of magnitude,
/// not sharp values, and are labelled accordingly.
#[derive(Debug, Clone, Copy)]
pub struct TheoryDiagnostics {
    /// Lower bound on `sigma_min(A_K)` over all gains with spectral norm at
    /// most `gain_bound` and closed-loop radius at most `rho_bound`:
    /// `2 (1 - rho^2) min{s_min(D0)/2, sigma^2/(8 Kbar^2), sigma^2/2}^2`.
    pub td_curvature_floor: f64,
    /// Upper bound on the average cost of any such gain, with the
    /// norm-equivalence constant taken as one.
    pub cost_bound: f64,
    /// True when `cost_bound` assumes the unknown equivalence constant is 1.
    pub norm_constant_assumed_one: bool,
}

/// Evaluate the diagnostic constants for a gain-norm bound and a closed-loop
/// radius bound. `rho_bound` must lie in (0, 1).
pub fn theory_diagnostics(
    prob: &LqrProblem,
    gain_bound: f64,
    rho_bound: f64,
) -> Result<TheoryDiagnostics> {
    if !(0.0..1.0).contains(&rho_bound) || rho_bound <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "closed-loop radius bound must lie in (0, 1), got {rho_bound}"
        )));
    }
    if gain_bound < 0.0 {
        return Err(Error::InvalidParam(format!(
            "gain norm bound must be nonnegative, got {gain_bound}"
        )));
    }
    let sigma_sq = prob.sigma() * prob.sigma();
    let noise_floor = min_singular_value(prob.d0()) / 2.0;
    let excitation_floor = if gain_bound > 0.0 {
        sigma_sq / (8.0 * gain_bound * gain_bound)
    } else {
        f64::INFINITY
    };
    let joint_floor = noise_floor.min(excitation_floor).min(sigma_sq / 2.0);
    let td_curvature_floor = 2.0 * (1.0 - rho_bound * rho_bound) * joint_floor * joint_floor;

    let d = prob.state_dim() as f64;
    let mixing = 1.0 - ((1.0 + rho_bound) / 2.0).powi(2);
    let cost_bound = prob.q().norm()
        + d * gain_bound * gain_bound
        + prob.r().norm()
        + sigma_sq * prob.r().trace()
        + d.sqrt() * spectral_norm(prob.d_sigma()) / mixing;

    Ok(TheoryDiagnostics {
        td_curvature_floor,
        cost_bound,
        norm_constant_assumed_one: true,
    })
}

/// Frobenius-route bound on the joint covariance norm:
/// `|T| <= sigma^2 k + |D_K| (d + |K|_F^2)`.
pub fn joint_covariance_norm_bound(prob: &LqrProblem, gain: &PolicyGain) -> Result<f64> {
    let d_k = crate::oracle::stationary_covariance(prob, gain)?;
    let k = prob.input_dim() as f64;
    let d = prob.state_dim() as f64;
    Ok(prob.sigma().powi(2) * k
        + spectral_norm(&d_k) * (d + gain.matrix().norm_squared()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn curvature_floor_by_direct_substitution() {
        // sigma = 1, gain bound 1, D0 = I, rho bound 0.5:
        // 2 * 0.75 * min{0.5, 0.125, 0.5}^2 = 0.0234375
        let prob = LqrProblem::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            1.0,
        )
        .unwrap();
        let diag = theory_diagnostics(&prob, 1.0, 0.5).unwrap();
        assert_relative_eq!(diag.td_curvature_floor, 0.0234375, epsilon = 1e-15);
        assert!(diag.norm_constant_assumed_one);
    }

    #[test]
    fn diagnostics_reject_bad_radius() {
        let prob = LqrProblem::new(
            DMatrix::zeros(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            1.0,
        )
        .unwrap();
        assert!(theory_diagnostics(&prob, 1.0, 1.0).is_err());
        assert!(theory_diagnostics(&prob, 1.0, 0.0).is_err());
        assert!(theory_diagnostics(&prob, -1.0, 0.5).is_err());
    }

    #[test]
    fn domination_vanishes_at_optimum() {
        let prob = LqrProblem::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            0.5,
        )
        .unwrap();
        let opt = prob.optimal().unwrap();
        let bounds = gradient_domination_bounds(&prob, &opt.gain, &opt.gain).unwrap();
        assert!(bounds.lower.abs() <= 1e-12);
        assert!(bounds.gap.abs() <= 1e-12);
        assert!(bounds.upper.abs() <= 1e-12);
        assert!(bounds.holds(1e-12));
    }

    #[test]
    fn smoothness_residual_vanishes_for_equal_gains() {
        let prob = LqrProblem::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            0.5,
        )
        .unwrap();
        let opt = prob.optimal().unwrap();
        let res = almost_smoothness_residual(&prob, &opt.gain, &opt.gain).unwrap();
        assert!(res <= 1e-15);
    }
}
