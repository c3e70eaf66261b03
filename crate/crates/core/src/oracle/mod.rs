//! Closed-form ground truth for the noisy LQR.
//!
//! Everything a stabilizing gain induces — stationary covariances, average
//! cost, gradients, the Q-function quadratic form, and the critic's TD fixed
//! point — is computable from the problem matrices through two Lyapunov
//! solves. This module provides those quantities exactly, so learning
//! algorithms can be measured against them and every identity they rely on
//! can be verified numerically.

mod bounds;
mod gains;

pub use bounds::{
    almost_smoothness_residual, gradient_domination_bounds, joint_covariance_norm_bound,
    theory_diagnostics, DominationBounds, TheoryDiagnostics,
};
pub use gains::random_stabilizing_gain;

use crate::error::{Error, Result};
use crate::symlin::{
    require_symmetric, solve_dare, spectral_radius, svec_unchecked, sym_kron, DareSolution, SymVec,
};
use nalgebra::{Cholesky, DMatrix, DVector};

/// The controlled system: linear dynamics `x' = Ax + Bu + e`, quadratic cost
/// `x'Qx + u'Ru`, process noise `e ~ N(0, D0)`, and Gaussian policy
/// exploration with standard deviation `sigma`.
#[derive(Debug, Clone)]
pub struct LqrProblem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    d0: DMatrix<f64>,
    sigma: f64,
    d_sigma: DMatrix<f64>,
}

impl LqrProblem {
    /// Validates dimensions and definiteness: `Q` positive semidefinite,
    /// `R` and `D0` positive definite, `sigma >= 0`.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        d0: DMatrix<f64>,
        sigma: f64,
    ) -> Result<Self> {
        let d = a.nrows();
        let k = b.ncols();
        if a.ncols() != d {
            return Err(Error::DimensionMismatch("A must be square".into()));
        }
        if b.nrows() != d {
            return Err(Error::DimensionMismatch(format!(
                "B must have {d} rows, got {}",
                b.nrows()
            )));
        }
        if q.nrows() != d || q.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "Q must be {d}x{d}, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if r.nrows() != k || r.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "R must be {k}x{k}, got {}x{}",
                r.nrows(),
                r.ncols()
            )));
        }
        if d0.nrows() != d || d0.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "D0 must be {d}x{d}, got {}x{}",
                d0.nrows(),
                d0.ncols()
            )));
        }
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidParam(format!(
                "exploration std must be finite and nonnegative, got {sigma}"
            )));
        }
        let q = require_symmetric(&q)?;
        let r = require_symmetric(&r)?;
        let d0 = require_symmetric(&d0)?;
        let min_q = q.clone().symmetric_eigen().eigenvalues.min();
        if min_q < -1e-10 {
            return Err(Error::NotPositiveDefinite {
                context: format!("Q (min eigenvalue {min_q:.3e})"),
            });
        }
        if Cholesky::new(r.clone()).is_none() {
            return Err(Error::NotPositiveDefinite {
                context: "R".into(),
            });
        }
        if Cholesky::new(d0.clone()).is_none() {
            return Err(Error::NotPositiveDefinite {
                context: "D0".into(),
            });
        }
        let d_sigma = &d0 + sigma * sigma * &b * b.transpose();
        if Cholesky::new(d_sigma.clone()).is_none() {
            return Err(Error::NotPositiveDefinite {
                context: "effective noise covariance D0 + sigma^2 BB'".into(),
            });
        }
        Ok(LqrProblem {
            a,
            b,
            q,
            r,
            d0,
            sigma,
            d_sigma,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Combined state-action dimension `d + k`.
    pub fn joint_dim(&self) -> usize {
        self.state_dim() + self.input_dim()
    }

    /// Length of the quadratic feature vector, `(d+k)(d+k+1)/2`.
    pub fn feature_dim(&self) -> usize {
        let n = self.joint_dim();
        n * (n + 1) / 2
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn d0(&self) -> &DMatrix<f64> {
        &self.d0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Effective closed-loop noise covariance `D0 + sigma^2 BB'`.
    pub fn d_sigma(&self) -> &DMatrix<f64> {
        &self.d_sigma
    }

    /// Same system with a different exploration level.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        LqrProblem::new(
            self.a.clone(),
            self.b.clone(),
            self.q.clone(),
            self.r.clone(),
            self.d0.clone(),
            sigma,
        )
    }

    /// `A - BK` for a gain matrix.
    pub fn closed_loop(&self, gain: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a - &self.b * gain
    }

    /// Block-diagonal joint cost matrix `diag(Q, R)` on state-action space.
    pub fn joint_cost_matrix(&self) -> DMatrix<f64> {
        let (d, k) = (self.state_dim(), self.input_dim());
        let mut sigma_mat = DMatrix::zeros(d + k, d + k);
        sigma_mat.view_mut((0, 0), (d, d)).copy_from(&self.q);
        sigma_mat.view_mut((d, d), (k, k)).copy_from(&self.r);
        sigma_mat
    }

    /// Running cost `x'Qx + u'Ru`.
    pub fn cost(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        (self.q.clone() * x).dot(x) + (self.r.clone() * u).dot(u)
    }

    /// Exact optimal solution via the Riccati equation.
    pub fn optimal(&self) -> Result<OptimalSolution> {
        let dare = solve_dare(&self.a, &self.b, &self.q, &self.r)?;
        let gain = PolicyGain::from_parts(dare.gain.clone(), dare.closed_loop_radius);
        let avg_cost = (&dare.p * &self.d_sigma).trace() + self.sigma.powi(2) * self.r.trace();
        Ok(OptimalSolution {
            gain,
            value_matrix: dare.p.clone(),
            avg_cost,
            dare,
        })
    }
}

/// Optimal gain, value matrix, and average cost for a problem instance.
#[derive(Debug, Clone)]
pub struct OptimalSolution {
    pub gain: PolicyGain,
    /// Riccati fixed point `P*`.
    pub value_matrix: DMatrix<f64>,
    /// `J(K*) = Tr(P* D_sigma) + sigma^2 Tr(R)`.
    pub avg_cost: f64,
    pub dare: DareSolution,
}

/// A linear feedback gain with its closed-loop spectral radius cached.
#[derive(Debug, Clone)]
pub struct PolicyGain {
    matrix: DMatrix<f64>,
    rho: f64,
}

impl PolicyGain {
    /// Wrap a gain for the given problem, computing `rho(A - BK)`.
    pub fn new(prob: &LqrProblem, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != prob.input_dim() || matrix.ncols() != prob.state_dim() {
            return Err(Error::DimensionMismatch(format!(
                "gain must be {}x{}, got {}x{}",
                prob.input_dim(),
                prob.state_dim(),
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let rho = spectral_radius(&prob.closed_loop(&matrix))?;
        Ok(PolicyGain { matrix, rho })
    }

    pub(crate) fn from_parts(matrix: DMatrix<f64>, rho: f64) -> Self {
        PolicyGain { matrix, rho }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Cached `rho(A - BK)`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn is_stabilizing(&self) -> bool {
        self.rho < 1.0
    }

    fn require_stabilizing(&self) -> Result<()> {
        if self.is_stabilizing() {
            Ok(())
        } else {
            Err(Error::Unstable { rho: self.rho })
        }
    }
}

/// Stationary state covariance `D_K`, the fixed point of
/// `D = D_sigma + (A-BK) D (A-BK)'`.
pub fn stationary_covariance(prob: &LqrProblem, gain: &PolicyGain) -> Result<DMatrix<f64>> {
    gain.require_stabilizing()?;
    let f = prob.closed_loop(gain.matrix());
    crate::symlin::solve::solve_discrete_lyapunov_stable(&f, &prob.d_sigma)
}

/// Value matrix `P_K`, the fixed point of
/// `P = Q + K'RK + (A-BK)' P (A-BK)`.
pub fn value_matrix(prob: &LqrProblem, gain: &PolicyGain) -> Result<DMatrix<f64>> {
    gain.require_stabilizing()?;
    let k = gain.matrix();
    let f = prob.closed_loop(k).transpose();
    let s = &prob.q + k.transpose() * &prob.r * k;
    crate::symlin::solve::solve_discrete_lyapunov_stable(&f, &s)
}

/// Joint state-action transition matrix: `(x,u) -> (x',u')` under the policy
/// has mean map `L = [A, B; -KA, -KB]`.
pub fn joint_transition(prob: &LqrProblem, gain: &PolicyGain) -> DMatrix<f64> {
    let (d, k) = (prob.state_dim(), prob.input_dim());
    let km = gain.matrix();
    let mut l = DMatrix::zeros(d + k, d + k);
    l.view_mut((0, 0), (d, d)).copy_from(&prob.a);
    l.view_mut((0, d), (d, k)).copy_from(&prob.b);
    l.view_mut((d, 0), (k, d)).copy_from(&(-km * &prob.a));
    l.view_mut((d, d), (k, k)).copy_from(&(-km * &prob.b));
    l
}

/// Stationary joint state-action covariance, assembled from `D_K`:
/// `[D_K, -D_K K'; -K D_K, K D_K K' + sigma^2 I]`.
pub fn joint_stationary_covariance(prob: &LqrProblem, gain: &PolicyGain) -> Result<DMatrix<f64>> {
    let d_k = stationary_covariance(prob, gain)?;
    Ok(assemble_joint_covariance(prob, gain.matrix(), &d_k))
}

fn assemble_joint_covariance(
    prob: &LqrProblem,
    k: &DMatrix<f64>,
    d_k: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (d, kdim) = (prob.state_dim(), prob.input_dim());
    let mut joint = DMatrix::zeros(d + kdim, d + kdim);
    let cross = d_k * k.transpose();
    joint.view_mut((0, 0), (d, d)).copy_from(d_k);
    joint.view_mut((0, d), (d, kdim)).copy_from(&(-&cross));
    joint
        .view_mut((d, 0), (kdim, d))
        .copy_from(&(-cross.transpose()));
    let lower_right =
        k * d_k * k.transpose() + prob.sigma.powi(2) * DMatrix::identity(kdim, kdim);
    joint.view_mut((d, d), (kdim, kdim)).copy_from(&lower_right);
    joint
}

/// Same covariance obtained as the fixed point of the joint-chain Lyapunov
/// equation; an independent route used to cross-check the block formula.
pub fn joint_stationary_covariance_via_lyapunov(
    prob: &LqrProblem,
    gain: &PolicyGain,
) -> Result<DMatrix<f64>> {
    gain.require_stabilizing()?;
    let (d, kdim) = (prob.state_dim(), prob.input_dim());
    let km = gain.matrix();
    let l = joint_transition(prob, gain);
    // noise covariance of the joint chain
    let mut noise = DMatrix::zeros(d + kdim, d + kdim);
    let cross = &prob.d0 * km.transpose();
    noise.view_mut((0, 0), (d, d)).copy_from(&prob.d0);
    noise.view_mut((0, d), (d, kdim)).copy_from(&(-&cross));
    noise
        .view_mut((d, 0), (kdim, d))
        .copy_from(&(-cross.transpose()));
    let lower_right =
        km * &prob.d0 * km.transpose() + prob.sigma.powi(2) * DMatrix::identity(kdim, kdim);
    noise.view_mut((d, d), (kdim, kdim)).copy_from(&lower_right);
    crate::symlin::solve::solve_discrete_lyapunov_stable(&l, &noise)
}

/// The expected TD update operator for the quadratic critic: the pair
/// `(A_K, b_K)` with `E[next critic | w] = w + beta (b_K - A_K w)`.
///
/// Both pieces have closed forms over the joint covariance: the curvature is
/// `A_K = 2 (T (x)_s T)(I - L' (x)_s L')` with `T` the joint covariance, and
/// the offset is `b_K = 2 svec(T diag(Q,R) T)`, obtained from the Gaussian
/// quartic-moment identity. Their consistency with `svec` of the Q-function
/// quadratic form is a checked identity, not a definition.
pub fn td_operator(prob: &LqrProblem, gain: &PolicyGain) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let joint_cov = joint_stationary_covariance(prob, gain)?;
    let l = joint_transition(prob, gain);
    let n = prob.joint_dim();

    let cov_kron = sym_kron(&joint_cov, &joint_cov)?;
    let lt = l.transpose();
    let trans_kron = sym_kron(&lt, &lt)?;
    let identity = DMatrix::identity(prob.feature_dim(), prob.feature_dim());
    let a_k = 2.0 * cov_kron.matrix() * (identity - trans_kron.matrix());

    let sigma_mat = prob.joint_cost_matrix();
    let b_core = &joint_cov * sigma_mat * &joint_cov;
    debug_assert_eq!(b_core.nrows(), n);
    let b_k = 2.0 * svec_unchecked(&(&b_core + b_core.transpose()).scale(0.5)).data().clone();

    Ok((a_k, b_k))
}

/// Everything the oracle knows about one stabilizing gain.
#[derive(Debug, Clone)]
pub struct PolicyEvaluation {
    /// Stationary state covariance `D_K`.
    pub state_cov: DMatrix<f64>,
    /// Value matrix `P_K`.
    pub value_matrix: DMatrix<f64>,
    /// Average cost `J(K) = Tr(P_K D_sigma) + sigma^2 Tr(R)`.
    pub avg_cost: f64,
    /// Natural gradient `E_K = (R + B'P_K B)K - B'P_K A`.
    pub natural_grad: DMatrix<f64>,
    /// Plain gradient `2 E_K D_K`.
    pub grad: DMatrix<f64>,
    /// Quadratic form of the centered Q-function over (x,u).
    pub q_form: DMatrix<f64>,
    /// TD fixed point: `svec` of the Q-form.
    pub critic_target: SymVec,
    /// Stationary joint state-action covariance.
    pub joint_cov: DMatrix<f64>,
    /// TD curvature `A_K`.
    pub td_matrix: DMatrix<f64>,
    /// TD offset `b_K`.
    pub td_offset: DVector<f64>,
    /// Constant subtracted in the Q-function:
    /// `sigma^2 Tr(R + P_K BB') + Tr(P_K D_K)`.
    pub q_offset: f64,
}

/// Full closed-form evaluation of a stabilizing gain.
pub fn evaluate_policy(prob: &LqrProblem, gain: &PolicyGain) -> Result<PolicyEvaluation> {
    gain.require_stabilizing()?;
    let k = gain.matrix();
    let state_cov = stationary_covariance(prob, gain)?;
    let p = value_matrix(prob, gain)?;
    let avg_cost = (&p * &prob.d_sigma).trace() + prob.sigma.powi(2) * prob.r.trace();

    let btp = prob.b.transpose() * &p;
    let natural_grad = (&prob.r + &btp * &prob.b) * k - &btp * &prob.a;
    let grad = 2.0 * &natural_grad * &state_cov;

    let (d, kdim) = (prob.state_dim(), prob.input_dim());
    let mut q_form = DMatrix::zeros(d + kdim, d + kdim);
    let atpa = prob.a.transpose() * &p * &prob.a;
    let atpb = prob.a.transpose() * &p * &prob.b;
    let btpb = prob.b.transpose() * &p * &prob.b;
    q_form.view_mut((0, 0), (d, d)).copy_from(&(&prob.q + atpa));
    q_form.view_mut((0, d), (d, kdim)).copy_from(&atpb);
    q_form
        .view_mut((d, 0), (kdim, d))
        .copy_from(&atpb.transpose());
    q_form
        .view_mut((d, d), (kdim, kdim))
        .copy_from(&(&prob.r + btpb));
    let q_form = (&q_form + q_form.transpose()) * 0.5;
    let critic_target = svec_unchecked(&q_form);

    let joint_cov = assemble_joint_covariance(prob, k, &state_cov);
    let (td_matrix, td_offset) = td_operator(prob, gain)?;

    let q_offset = prob.sigma.powi(2) * (&prob.r + &btp * &prob.b).trace() + (&p * &state_cov).trace();

    Ok(PolicyEvaluation {
        state_cov,
        value_matrix: p,
        avg_cost,
        natural_grad,
        grad,
        q_form,
        critic_target,
        joint_cov,
        td_matrix,
        td_offset,
        q_offset,
    })
}

impl PolicyEvaluation {
    /// Centered Q-value `Q_K(x, u)`: the quadratic form minus the constant
    /// that makes the stationary expectation zero.
    pub fn q_value(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        let mut joint = DVector::zeros(x.len() + u.len());
        joint.rows_mut(0, x.len()).copy_from(x);
        joint.rows_mut(x.len(), u.len()).copy_from(u);
        (&self.q_form * &joint).dot(&joint) - self.q_offset
    }

    /// Residual of the TD fixed-point identity `A_K svec(q_form) = b_K`.
    pub fn td_fixed_point_residual(&self) -> f64 {
        (&self.td_matrix * self.critic_target.data() - &self.td_offset).amax()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_problem() -> LqrProblem {
        LqrProblem::new(
            DMatrix::zeros(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn scalar_pure_noise_policy() {
        let prob = scalar_problem();
        let gain = PolicyGain::new(&prob, DMatrix::zeros(1, 1)).unwrap();
        let eval = evaluate_policy(&prob, &gain).unwrap();
        assert_relative_eq!(eval.state_cov[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(eval.value_matrix[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(eval.avg_cost, 1.0, epsilon = 1e-12);
        assert!(eval.natural_grad.norm() <= 1e-12);
        // q_value at the origin is minus the centering constant
        assert_relative_eq!(
            eval.q_value(&DVector::zeros(1), &DVector::zeros(1)),
            -1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rejects_unstable_gain() {
        let prob = scalar_problem();
        // A - BK = 0 - 1*(-2) = 2
        let gain = PolicyGain::new(&prob, DMatrix::from_element(1, 1, -2.0)).unwrap();
        assert!(matches!(
            evaluate_policy(&prob, &gain),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn construction_rejects_indefinite_noise() {
        let res = LqrProblem::new(
            DMatrix::zeros(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::from_element(1, 1, -1.0),
            0.0,
        );
        assert!(matches!(res, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn joint_covariance_block_diagonal_without_feedback() {
        // with K = 0 the action is independent exploration noise
        let prob = LqrProblem::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 0.4, 0.4, 0.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            1.0,
        )
        .unwrap();
        let gain = PolicyGain::new(&prob, DMatrix::zeros(2, 2)).unwrap();
        let joint = joint_stationary_covariance(&prob, &gain).unwrap();
        let d_k = stationary_covariance(&prob, &gain).unwrap();
        assert_relative_eq!(joint.view((0, 0), (2, 2)).clone_owned(), d_k, epsilon = 1e-12);
        assert_relative_eq!(
            joint.view((2, 2), (2, 2)).clone_owned(),
            DMatrix::identity(2, 2),
            epsilon = 1e-12
        );
        assert!(joint.view((0, 2), (2, 2)).norm() <= 1e-12);
    }

    #[test]
    fn td_fixed_point_scalar_case() {
        // A = 0, K = 0, sigma = 1: closed forms are small enough to check by hand
        let prob = LqrProblem::new(
            DMatrix::zeros(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::identity(1, 1),
            1.0,
        )
        .unwrap();
        let gain = PolicyGain::new(&prob, DMatrix::zeros(1, 1)).unwrap();
        let eval = evaluate_policy(&prob, &gain).unwrap();
        assert_relative_eq!(eval.state_cov[(0, 0)], 2.0, epsilon = 1e-12);
        let expected_b = DVector::from_vec(vec![8.0, 0.0, 2.0]);
        assert_relative_eq!(eval.td_offset, expected_b, epsilon = 1e-10);
        assert!(eval.td_fixed_point_residual() <= 1e-10);
    }
}
