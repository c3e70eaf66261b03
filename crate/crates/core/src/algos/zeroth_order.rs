//! Zeroth-order natural policy gradient baseline.
//!
//! The gradient is estimated from finite differences of rollout costs along
//! random directions on the Frobenius unit sphere, and preconditioned by the
//! inverse of the empirical state covariance accumulated along the unperturbed
//! rollouts. Rollout actions are the deterministic feedback `u = -Kx`; the
//! exploration comes entirely from the parameter perturbation.

use crate::algos::{MetricContext, RunRecord, StabilityPolicy, Termination, TraceBuffer};
use crate::env::LqrEnv;
use crate::error::{Error, Result};
use crate::oracle::{stationary_covariance, LqrProblem, PolicyGain};
use crate::rng::{RngStream, StreamId};
use crate::symlin::GaussianSampler;
use nalgebra::{DMatrix, DVector};

/// Distribution of rollout start states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitDist {
    /// `N(0, D0)`, the process-noise covariance.
    ProcessNoise,
    /// `N(0, D_K)` for the current policy (oracle covariance).
    Stationary,
}

#[derive(Debug, Clone)]
pub struct ZerothOrderParams {
    /// Rollout pairs per policy update (`z`).
    pub trajectories: usize,
    /// Rollout length (`l`).
    pub rollout_len: usize,
    /// Perturbation amplitude (`r`).
    pub perturbation: f64,
    /// Policy step size.
    pub policy_step: f64,
    /// Number of policy updates.
    pub outer_steps: usize,
    pub init_dist: InitDist,
    /// Multiply the finite-difference estimate by the parameter dimension
    /// `k*d`. Off by default: the plain difference estimator converges with a
    /// correspondingly rescaled step, and that is the variant benchmarked.
    pub dimension_scaled: bool,
    pub stability: StabilityPolicy,
    /// Metric grid spacing in outer steps.
    pub trace_every: u64,
}

impl ZerothOrderParams {
    pub fn new(trajectories: usize, rollout_len: usize, outer_steps: usize) -> Self {
        ZerothOrderParams {
            trajectories,
            rollout_len,
            perturbation: 0.1,
            policy_step: 0.01,
            outer_steps,
            init_dist: InitDist::ProcessNoise,
            dimension_scaled: false,
            stability: StabilityPolicy::Abort,
            trace_every: 1,
        }
    }
}

/// Maximum tolerated condition number of the empirical covariance before the
/// preconditioner is declared singular.
const COVARIANCE_CONDITION_LIMIT: f64 = 1e12;

/// Uniform draw from the Frobenius unit sphere of `rows x cols` matrices.
pub fn uniform_frobenius_sphere(rows: usize, cols: usize, rng: &mut RngStream) -> DMatrix<f64> {
    loop {
        let raw = DMatrix::from_fn(rows, cols, |_, _| rng.standard_normal());
        let norm = raw.norm();
        if norm > 0.0 {
            return raw / norm;
        }
    }
}

pub fn zeroth_order_npg(
    prob: &LqrProblem,
    initial_gain: &PolicyGain,
    params: &ZerothOrderParams,
    seed: u64,
) -> Result<RunRecord> {
    if !initial_gain.is_stabilizing() {
        return Err(Error::Unstable {
            rho: initial_gain.rho(),
        });
    }
    if params.trajectories == 0 || params.rollout_len == 0 {
        return Err(Error::InvalidParam(
            "need at least one trajectory and one rollout step".into(),
        ));
    }
    if params.perturbation <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "perturbation amplitude must be positive, got {}",
            params.perturbation
        )));
    }
    if params.trace_every == 0 {
        return Err(Error::InvalidParam("trace_every must be positive".into()));
    }

    let env = LqrEnv::new(prob)?;
    let metrics = MetricContext::new(prob)?;
    let mut rng = RngStream::new(seed, StreamId::Algorithm);

    let (d, kdim) = (prob.state_dim(), prob.input_dim());
    let mut gain = initial_gain.clone();
    let mut sampling_gain = initial_gain.clone();
    let mut trace = TraceBuffer::new();
    let mut stability_violations = 0u64;
    let mut status = Termination::Completed;

    // cost and state-outer-product sums of one deterministic-feedback rollout
    let rollout = |k: &DMatrix<f64>,
                       x0: &DVector<f64>,
                       cov_acc: Option<&mut DMatrix<f64>>,
                       rng: &mut RngStream|
     -> Result<f64> {
        let mut x = x0.clone();
        let mut cost_sum = 0.0;
        match cov_acc {
            Some(acc) => {
                for _ in 0..params.rollout_len {
                    *acc += &x * x.transpose();
                    let u = -(k * &x);
                    let (cost, x_next) = env.step(&x, &u, rng)?;
                    cost_sum += cost;
                    x = x_next;
                }
            }
            None => {
                for _ in 0..params.rollout_len {
                    let u = -(k * &x);
                    let (cost, x_next) = env.step(&x, &u, rng)?;
                    cost_sum += cost;
                    x = x_next;
                }
            }
        }
        Ok(cost_sum)
    };

    'outer: for j in 0..params.outer_steps as u64 {
        let start_sampler = match params.init_dist {
            InitDist::ProcessNoise => GaussianSampler::new(prob.d0())?,
            InitDist::Stationary => {
                GaussianSampler::new(&stationary_covariance(prob, &sampling_gain)?)?
            }
        };

        let mut grad_acc = DMatrix::zeros(kdim, d);
        let mut cov_acc = DMatrix::zeros(d, d);
        for _ in 0..params.trajectories {
            let x0 = start_sampler.sample(&mut rng);
            let base_cost = rollout(gain.matrix(), &x0, Some(&mut cov_acc), &mut rng)?;
            let direction = uniform_frobenius_sphere(kdim, d, &mut rng);
            let perturbed = gain.matrix() + params.perturbation * &direction;
            let perturbed_cost = rollout(&perturbed, &x0, None, &mut rng)?;
            grad_acc += ((perturbed_cost - base_cost) / params.perturbation) * direction;
        }
        let z = params.trajectories as f64;
        let mut grad_est = grad_acc / z;
        if params.dimension_scaled {
            grad_est *= (kdim * d) as f64;
        }
        let cov_est = cov_acc / z;

        let singular = cov_est.singular_values();
        let (smax, smin) = (singular.max(), singular.min());
        if !(smin > 0.0 && smax / smin <= COVARIANCE_CONDITION_LIMIT) {
            status = Termination::SingularCovariance { t: j + 1 };
            break;
        }
        // step direction G C^{-1}, computed as (C \ G')' using symmetry of C
        let solved = cov_est
            .clone()
            .lu()
            .solve(&grad_est.transpose())
            .ok_or(Error::Singular {
                context: "empirical covariance preconditioner".into(),
                condition: smax / smin,
            })?;
        let precond = solved.transpose();

        let next_matrix = gain.matrix() - params.policy_step * precond;
        if !next_matrix.iter().all(|v| v.is_finite()) {
            status = Termination::NonFinite { t: j + 1 };
            break;
        }
        gain = PolicyGain::new(prob, next_matrix)?;
        if gain.is_stabilizing() {
            sampling_gain = gain.clone();
        } else {
            stability_violations += 1;
            if params.stability == StabilityPolicy::Abort {
                status = Termination::Unstable {
                    t: j + 1,
                    rho: gain.rho(),
                };
                break 'outer;
            }
        }

        let done = j + 1;
        if done % params.trace_every == 0 || done == params.outer_steps as u64 {
            let samples = done * (params.trajectories * 2 * params.rollout_len) as u64;
            trace.push(metrics.row(done, samples, &gain, None, None));
        }
    }

    Ok(RunRecord {
        config_hash: 0,
        seed,
        rows: trace.into_rows(),
        status,
        stability_violations,
        projection_violations: 0,
        step_bound_violations: 0,
        final_gain: gain.matrix().clone(),
    })
}
