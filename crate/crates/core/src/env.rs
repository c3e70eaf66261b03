//! Stochastic simulation of the noisy LQR environment.
//!
//! The environment is deliberately thin: Gaussian policy actions, one-step
//! dynamics with fresh process noise, quadratic costs, and the quadratic
//! feature map the critic learns over. Stationary states can be drawn either
//! exactly (through the oracle covariance, matching the idealized sampling
//! the analysis assumes) or model-free by running the closed-loop chain for a
//! burn-in from a warm start.

use crate::error::{Error, Result};
use crate::oracle::{stationary_covariance, LqrProblem, PolicyGain};
use crate::rng::RngStream;
use crate::symlin::{svec_unchecked, GaussianSampler, SymVec};
use nalgebra::{DMatrix, DVector};

/// One environment interaction as consumed by the learners: the state-action
/// pair, its cost, and the subsequent state-action pair.
#[derive(Debug, Clone)]
pub struct Transition {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub cost: f64,
    pub x_next: DVector<f64>,
    pub u_next: DVector<f64>,
}

/// Gaussian policy action `u = -Kx + sigma * zeta`, `zeta ~ N(0, I)`.
pub fn policy_action(
    gain: &DMatrix<f64>,
    x: &DVector<f64>,
    sigma: f64,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    if gain.ncols() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "gain has {} columns but state has length {}",
            gain.ncols(),
            x.len()
        )));
    }
    if sigma < 0.0 {
        return Err(Error::InvalidParam(format!(
            "exploration std must be nonnegative, got {sigma}"
        )));
    }
    let mut u = -(gain * x);
    if sigma > 0.0 {
        u += sigma * rng.normal_vector(gain.nrows());
    }
    Ok(u)
}

/// Quadratic feature vector `svec((x;u)(x;u)')` of length `(d+k)(d+k+1)/2`.
pub fn feature(x: &DVector<f64>, u: &DVector<f64>) -> SymVec {
    let n = x.len() + u.len();
    let mut joint = DVector::zeros(n);
    joint.rows_mut(0, x.len()).copy_from(x);
    joint.rows_mut(x.len(), u.len()).copy_from(u);
    svec_unchecked(&(&joint * joint.transpose()))
}

/// How stationary states are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Draw `x ~ N(0, D_K)` with the oracle covariance.
    Exact,
    /// Advance the closed-loop chain this many steps from the previous state
    /// and return the last one.
    Mixed(usize),
}

/// Simulator for one problem instance.
#[derive(Debug, Clone)]
pub struct LqrEnv {
    prob: LqrProblem,
    noise: GaussianSampler,
}

impl LqrEnv {
    pub fn new(prob: &LqrProblem) -> Result<Self> {
        let noise = GaussianSampler::new(prob.d0())?;
        Ok(LqrEnv {
            prob: prob.clone(),
            noise,
        })
    }

    pub fn problem(&self) -> &LqrProblem {
        &self.prob
    }

    /// Apply one step of the dynamics: returns the running cost of `(x, u)`
    /// and the successor state with fresh process noise.
    pub fn step(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        rng: &mut RngStream,
    ) -> Result<(f64, DVector<f64>)> {
        if x.len() != self.prob.state_dim() || u.len() != self.prob.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected state {} and input {}, got {} and {}",
                self.prob.state_dim(),
                self.prob.input_dim(),
                x.len(),
                u.len()
            )));
        }
        let cost = self.prob.cost(x, u);
        let x_next = self.prob.a() * x + self.prob.b() * u + self.noise.sample(rng);
        Ok((cost, x_next))
    }

    /// Draw a state from the stationary distribution of the closed loop under
    /// the given gain. `warm` carries chain state across calls in mixed mode
    /// and is refreshed in exact mode as well.
    pub fn sample_stationary(
        &self,
        gain: &PolicyGain,
        mode: SamplingMode,
        warm: &mut DVector<f64>,
        rng: &mut RngStream,
    ) -> Result<DVector<f64>> {
        if !gain.is_stabilizing() {
            return Err(Error::Unstable { rho: gain.rho() });
        }
        match mode {
            SamplingMode::Exact => {
                let cov = stationary_covariance(&self.prob, gain)?;
                let sampler = GaussianSampler::new(&cov)?;
                let x = sampler.sample(rng);
                warm.copy_from(&x);
                Ok(x)
            }
            SamplingMode::Mixed(burn_in) => {
                for _ in 0..burn_in {
                    let u = policy_action(gain.matrix(), warm, self.prob.sigma(), rng)?;
                    let (_, x_next) = self.step(warm, &u, rng)?;
                    warm.copy_from(&x_next);
                }
                Ok(warm.clone())
            }
        }
    }

    /// One full transition under the policy: action, step, and the action at
    /// the successor state.
    pub fn transition(
        &self,
        gain: &PolicyGain,
        x: DVector<f64>,
        rng: &mut RngStream,
    ) -> Result<Transition> {
        let sigma = self.prob.sigma();
        let u = policy_action(gain.matrix(), &x, sigma, rng)?;
        let (cost, x_next) = self.step(&x, &u, rng)?;
        let u_next = policy_action(gain.matrix(), &x_next, sigma, rng)?;
        Ok(Transition {
            x,
            u,
            cost,
            x_next,
            u_next,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamId;
    use approx::assert_relative_eq;

    fn small_problem(sigma: f64) -> LqrProblem {
        LqrProblem::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 0.4, 0.4, 0.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            sigma,
        )
        .unwrap()
    }

    #[test]
    fn action_is_deterministic_without_exploration() {
        let prob = small_problem(0.0);
        let gain = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.4]);
        let x = DVector::from_vec(vec![1.0, -1.0]);
        let mut rng = RngStream::new(0, StreamId::Algorithm);
        let u = policy_action(&gain, &x, 0.0, &mut rng).unwrap();
        assert_relative_eq!(u, -(&gain * &x), epsilon = 0.0);
        assert_eq!(rng.draw_count(), 0);
        let _ = prob;
    }

    #[test]
    fn action_rejects_dimension_mismatch() {
        let gain = DMatrix::zeros(2, 3);
        let x = DVector::zeros(2);
        let mut rng = RngStream::new(0, StreamId::Algorithm);
        assert!(policy_action(&gain, &x, 1.0, &mut rng).is_err());
    }

    #[test]
    fn step_from_origin_costs_nothing() {
        let prob = small_problem(1.0);
        let env = LqrEnv::new(&prob).unwrap();
        let mut rng = RngStream::new(1, StreamId::Algorithm);
        let (cost, x_next) = env
            .step(&DVector::zeros(2), &DVector::zeros(2), &mut rng)
            .unwrap();
        assert_eq!(cost, 0.0);
        // successor is pure process noise
        assert!(x_next.norm() > 0.0);
    }

    #[test]
    fn step_becomes_deterministic_as_noise_vanishes() {
        let prob = LqrProblem::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 0.4, 0.4, 0.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2) * 1e-30,
            0.0,
        )
        .unwrap();
        let env = LqrEnv::new(&prob).unwrap();
        let mut rng = RngStream::new(1, StreamId::Algorithm);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let u = DVector::from_vec(vec![-0.5, 0.25]);
        let (_, x_next) = env.step(&x, &u, &mut rng).unwrap();
        let expected = prob.a() * &x + prob.b() * &u;
        assert_relative_eq!(x_next, expected, epsilon = 1e-12);
    }

    #[test]
    fn feature_trivial_values() {
        let zero = feature(&DVector::zeros(1), &DVector::zeros(1));
        assert_eq!(zero.data().as_slice(), &[0.0, 0.0, 0.0]);
        let phi = feature(
            &DVector::from_vec(vec![1.0]),
            &DVector::from_vec(vec![2.0]),
        );
        let sqrt2 = std::f64::consts::SQRT_2;
        assert_relative_eq!(
            phi.data().clone_owned(),
            DVector::from_vec(vec![1.0, 2.0 * sqrt2, 4.0]),
            epsilon = 1e-15
        );
    }

    #[test]
    fn stationary_one_step_mixing_case() {
        // A = 0 and K = 0: the stationary covariance is exactly D_sigma
        let prob = LqrProblem::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            1.0,
        )
        .unwrap();
        let gain = PolicyGain::new(&prob, DMatrix::zeros(2, 2)).unwrap();
        let cov = stationary_covariance(&prob, &gain).unwrap();
        assert_relative_eq!(cov, prob.d_sigma().clone_owned(), epsilon = 1e-12);
    }
}
