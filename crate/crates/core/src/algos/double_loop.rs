//! Double-loop natural actor-critic baseline.
//!
//! Each outer step runs a long primal-dual TD inner loop along a single
//! closed-loop trajectory to estimate the critic of the current policy, then
//! takes one natural-gradient policy step from the step-size-weighted average
//! of the primal critic iterates.

use crate::algos::{
    natural_gradient_estimate, MetricContext, RunRecord, StabilityPolicy, Termination,
    TraceBuffer,
};
use crate::env::{feature, policy_action, LqrEnv, SamplingMode};
use crate::error::{Error, Result};
use crate::oracle::{evaluate_policy, LqrProblem, PolicyGain};
use crate::rng::{RngStream, StreamId};
use crate::symlin::SymVec;
use nalgebra::DVector;

#[derive(Debug, Clone)]
pub struct DoubleLoopParams {
    /// Inner TD iterations per policy update.
    pub inner_steps: usize,
    /// Number of policy updates.
    pub outer_steps: usize,
    /// Inner step size is `alpha_coeff / sqrt(1 + i)` at inner update `i`.
    pub alpha_coeff: f64,
    /// Policy step size.
    pub policy_step: f64,
    /// Euclidean ball radius for the primal pair `(v1, v2)`.
    pub primal_radius: f64,
    /// Euclidean ball radius for the dual pair `(w1, w2)`.
    pub dual_radius: f64,
    /// Replace the averaged critic by the oracle TD fixed point; reduces the
    /// policy update to exact natural-gradient descent (test hook, also
    /// usable for ablations). Allows `inner_steps = 0`.
    pub use_oracle_critic: bool,
    pub stability: StabilityPolicy,
    /// Metric grid spacing in outer steps.
    pub trace_every: u64,
}

impl DoubleLoopParams {
    pub fn new(inner_steps: usize, outer_steps: usize, radius: f64) -> Self {
        DoubleLoopParams {
            inner_steps,
            outer_steps,
            alpha_coeff: 0.01,
            policy_step: 0.05,
            primal_radius: radius,
            dual_radius: radius,
            use_oracle_critic: false,
            stability: StabilityPolicy::Abort,
            trace_every: 1,
        }
    }
}

/// Ball projection of a scalar-vector pair treated as one Euclidean vector.
fn project_pair(scalar: &mut f64, vector: &mut DVector<f64>, radius: f64) {
    let norm = (*scalar * *scalar + vector.norm_squared()).sqrt();
    if norm > radius {
        let shrink = radius / norm;
        *scalar *= shrink;
        *vector *= shrink;
    }
}

pub fn double_loop_nac(
    prob: &LqrProblem,
    initial_gain: &PolicyGain,
    params: &DoubleLoopParams,
    seed: u64,
) -> Result<RunRecord> {
    if !initial_gain.is_stabilizing() {
        return Err(Error::Unstable {
            rho: initial_gain.rho(),
        });
    }
    if params.trace_every == 0 {
        return Err(Error::InvalidParam("trace_every must be positive".into()));
    }
    if params.inner_steps == 0 && !params.use_oracle_critic {
        return Err(Error::InvalidParam(
            "inner loop needs at least one step unless the oracle critic is used".into(),
        ));
    }
    if params.primal_radius <= 0.0 || params.dual_radius <= 0.0 {
        return Err(Error::InvalidParam(
            "projection radii must be positive".into(),
        ));
    }

    let env = LqrEnv::new(prob)?;
    let metrics = MetricContext::new(prob)?;
    let mut rng = RngStream::new(seed, StreamId::Algorithm);

    let feature_len = prob.feature_dim();
    let mut gain = initial_gain.clone();
    // last stabilizing gain, used to restart trajectories in
    // continue-and-log runs
    let mut sampling_gain = initial_gain.clone();
    let mut warm = DVector::zeros(prob.state_dim());
    let mut trace = TraceBuffer::new();
    let mut stability_violations = 0u64;
    let mut projection_violations = 0u64;
    let mut status = Termination::Completed;
    let mut last_primal_cost = f64::NAN;

    'outer: for j in 0..params.outer_steps as u64 {
        let target = if gain.is_stabilizing() {
            Some(evaluate_policy(prob, &gain)?.critic_target)
        } else {
            None
        };

        let (critic_avg, critic_err_sq) = if params.use_oracle_critic {
            match &target {
                Some(t) => (t.clone(), 0.0),
                None => {
                    status = Termination::Unstable {
                        t: j,
                        rho: gain.rho(),
                    };
                    break 'outer;
                }
            }
        } else {
            // primal (v1, v2) and dual (w1, w2) iterates of the inner loop
            let mut v1 = 0.0f64;
            let mut v2 = DVector::zeros(feature_len);
            let mut w1 = 0.0f64;
            let mut w2 = DVector::zeros(feature_len);
            let mut weighted_sum = DVector::zeros(feature_len);
            let mut weight_total = 0.0f64;

            let x0 =
                env.sample_stationary(&sampling_gain, SamplingMode::Exact, &mut warm, &mut rng)?;
            let mut prev = env.transition(&gain, x0, &mut rng)?;
            let mut phi_prev = feature(&prev.x, &prev.u);

            for i in 0..params.inner_steps {
                // the successor action of the previous transition is the one
                // actually taken at its successor state
                let x = prev.x_next.clone();
                let u = prev.u_next.clone();
                let (cost, x_next) = env.step(&x, &u, &mut rng)?;
                let u_next = policy_action(gain.matrix(), &x_next, prob.sigma(), &mut rng)?;
                let phi = feature(&x, &u);

                let alpha = params.alpha_coeff / ((1 + i) as f64).sqrt();
                let phi_diff = phi_prev.data() - phi.data();
                let excitation = phi_prev.data().dot(&w2);
                let td = v1 - prev.cost + phi_diff.dot(&v2);

                let v1_next = v1 - alpha * (w1 + excitation);
                let v2_next = &v2 - &phi_diff * (alpha * excitation);
                let w1_next = (1.0 - alpha) * w1 + alpha * (v1 - prev.cost);
                let w2_next = (1.0 - alpha) * &w2 + phi_prev.data() * (alpha * td);

                v1 = v1_next;
                v2 = v2_next;
                w1 = w1_next;
                w2 = w2_next;
                project_pair(&mut v1, &mut v2, params.primal_radius);
                project_pair(&mut w1, &mut w2, params.dual_radius);
                if (v1 * v1 + v2.norm_squared()).sqrt() > params.primal_radius * (1.0 + 1e-12)
                    || (w1 * w1 + w2.norm_squared()).sqrt() > params.dual_radius * (1.0 + 1e-12)
                {
                    projection_violations += 1;
                }

                weighted_sum.axpy(alpha, &v2, 1.0);
                weight_total += alpha;

                prev = crate::env::Transition {
                    x,
                    u,
                    cost,
                    x_next,
                    u_next,
                };
                phi_prev = phi;
            }

            if !(v1.is_finite() && v2.iter().all(|v| v.is_finite())) {
                status = Termination::NonFinite { t: j + 1 };
                break 'outer;
            }
            last_primal_cost = v1;
            let averaged = SymVec::from_vector(weighted_sum / weight_total)?;
            let err = target
                .as_ref()
                .map_or(f64::NAN, |t| (averaged.data() - t.data()).norm_squared());
            (averaged, err)
        };

        let direction = natural_gradient_estimate(&critic_avg, gain.matrix())?;
        let next_matrix = gain.matrix() - params.policy_step * direction;
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
                break;
            }
        }

        let done = j + 1;
        if done % params.trace_every == 0 || done == params.outer_steps as u64 {
            let samples = done * params.inner_steps as u64;
            let eta = if params.use_oracle_critic {
                None
            } else {
                Some(last_primal_cost)
            };
            let mut row = metrics.row(done, samples, &gain, None, eta);
            row.critic_err_sq = critic_err_sq;
            trace.push(row);
        }
    }

    Ok(RunRecord {
        config_hash: 0,
        seed,
        rows: trace.into_rows(),
        status,
        stability_violations,
        projection_violations,
        step_bound_violations: 0,
        final_gain: gain.matrix().clone(),
    })
}
