//! Single-sample two-timescale natural actor-critic.
//!
//! Every iteration consumes exactly one environment transition and moves all
//! three coupled iterates: the average-cost tracker (clamped), the quadratic
//! critic (ball-projected TD step), and the actor, which descends the
//! natural-gradient estimate read off the critic that was just updated. The
//! critic runs on the faster timescale so it can track the moving policy.

use crate::algos::{
    CriticState, MetricContext, ProjectionRadii, RunRecord, Schedules, StabilityPolicy,
    Termination, TraceBuffer,
};
use crate::env::{feature, LqrEnv, SamplingMode};
use crate::error::{Error, Result};
use crate::oracle::{stationary_covariance, LqrProblem, PolicyGain};
use crate::rng::{RngStream, StreamId};
use crate::symlin::GaussianSampler;
use nalgebra::DVector;

#[derive(Debug, Clone)]
pub struct Ac2tParams {
    pub schedules: Schedules,
    pub projection: ProjectionRadii,
    pub sampling: SamplingMode,
    pub stability: StabilityPolicy,
    /// Metric grid spacing in iterations.
    pub trace_every: u64,
}

impl Ac2tParams {
    pub fn new(schedules: Schedules, projection: ProjectionRadii) -> Self {
        Ac2tParams {
            schedules,
            projection,
            sampling: SamplingMode::Exact,
            stability: StabilityPolicy::Abort,
            trace_every: 1000,
        }
    }
}

/// Run the two-timescale actor-critic from a stabilizing initial gain.
///
/// Runtime failures (loss of stability under the abort policy, non-finite
/// iterates) terminate the run and are reported in the record's status;
/// `Err` is reserved for invalid setup.
pub fn two_timescale_nac(
    prob: &LqrProblem,
    initial_gain: &PolicyGain,
    params: &Ac2tParams,
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
    let env = LqrEnv::new(prob)?;
    let metrics = MetricContext::new(prob)?;
    let mut rng = RngStream::new(seed, StreamId::Algorithm);

    let sched = &params.schedules;
    let horizon = sched.steps;
    let mut critic = CriticState::new(prob.joint_dim(), params.projection);
    let mut gain = initial_gain.clone();
    // most recent stabilizing gain, kept for exact sampling in
    // continue-and-log runs
    let mut sampling_gain = initial_gain.clone();
    let mut exact_sampler: Option<GaussianSampler> = None;

    let mut warm = DVector::zeros(prob.state_dim());
    let mut trace = TraceBuffer::new();
    let mut stability_violations = 0u64;
    let mut projection_violations = 0u64;
    let mut step_bound_violations = 0u64;
    let mut status = Termination::Completed;

    for t in 0..horizon {
        // fresh stationary state under the current policy
        let x = match params.sampling {
            SamplingMode::Exact => {
                let sampler = match &exact_sampler {
                    Some(s) => s,
                    None => {
                        let cov = stationary_covariance(prob, &sampling_gain)?;
                        exact_sampler = Some(GaussianSampler::new(&cov)?);
                        exact_sampler.as_ref().unwrap()
                    }
                };
                let x = sampler.sample(&mut rng);
                warm.copy_from(&x);
                x
            }
            SamplingMode::Mixed(burn_in) => {
                if gain.is_stabilizing() {
                    env.sample_stationary(&gain, params.sampling, &mut warm, &mut rng)?
                } else {
                    // continue-and-log with an unstable closed loop: no
                    // stationary distribution exists, so just roll the chain
                    for _ in 0..burn_in {
                        let u = crate::env::policy_action(
                            gain.matrix(),
                            &warm,
                            prob.sigma(),
                            &mut rng,
                        )?;
                        let (_, x_next) = env.step(&warm, &u, &mut rng)?;
                        warm.copy_from(&x_next);
                    }
                    if !warm.iter().all(|v| v.is_finite()) {
                        status = Termination::NonFinite { t };
                        break;
                    }
                    warm.clone()
                }
            }
        };

        let transition = env.transition(&gain, x, &mut rng)?;
        let phi = feature(&transition.x, &transition.u);
        let phi_next = feature(&transition.x_next, &transition.u_next);

        let td_error =
            transition.cost - critic.eta + phi_next.dot(&critic.omega) - phi.dot(&critic.omega);

        critic.update_eta(sched.gamma(t), transition.cost);
        critic.update_omega(sched.beta(t), td_error, &phi);
        if !critic.within_bounds() {
            projection_violations += 1;
        }

        let alpha = sched.alpha(t);
        let direction = crate::algos::natural_gradient_estimate(&critic.omega, gain.matrix())?;
        let next_matrix = gain.matrix() - alpha * &direction;

        // movement bound |K_{t+1} - K_t| <= alpha (|K_t| + 1) critic_radius
        let step_norm = alpha * direction.norm();
        let step_bound =
            alpha * (gain.matrix().norm() + 1.0) * params.projection.critic_radius;
        if step_norm > step_bound * (1.0 + 1e-9) {
            step_bound_violations += 1;
        }

        if !(next_matrix.iter().all(|v| v.is_finite())
            && critic.omega.data().iter().all(|v| v.is_finite())
            && critic.eta.is_finite())
        {
            status = Termination::NonFinite { t: t + 1 };
            break;
        }

        let moved = step_norm > 0.0;
        gain = PolicyGain::new(prob, next_matrix)?;
        if gain.is_stabilizing() {
            sampling_gain = gain.clone();
            if moved {
                exact_sampler = None;
            }
        } else {
            stability_violations += 1;
            if params.stability == StabilityPolicy::Abort {
                status = Termination::Unstable {
                    t: t + 1,
                    rho: gain.rho(),
                };
                break;
            }
        }

        let done = t + 1;
        if done % params.trace_every == 0 || done == horizon {
            trace.push(metrics.row(done, done, &gain, Some(&critic.omega), Some(critic.eta)));
        }
    }

    Ok(RunRecord {
        config_hash: 0,
        seed,
        rows: trace.into_rows(),
        status,
        stability_violations,
        projection_violations,
        step_bound_violations,
        final_gain: gain.matrix().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::oracle::random_stabilizing_gain;

    #[test]
    fn frozen_actor_never_moves() {
        let prob = benchmarks::dim2();
        let mut rng = RngStream::new(5, StreamId::GainInit);
        let k0 = random_stabilizing_gain(&prob, 0.95, 0.2, &mut rng).unwrap();
        let sched = Schedules::new(0.0, 0.6, 0.01, 0.1, 0.4, 500).unwrap();
        let params = Ac2tParams {
            trace_every: 100,
            ..Ac2tParams::new(sched, ProjectionRadii::new(100.0, 100.0).unwrap())
        };
        let record = two_timescale_nac(&prob, &k0, &params, 42).unwrap();
        assert!(record.status.is_completed());
        assert_eq!(record.final_gain, k0.matrix().clone());
        for row in &record.rows {
            assert_eq!(row.rel_gain_err, record.rows[0].rel_gain_err);
        }
    }

    #[test]
    fn identical_seeds_reproduce_records() {
        let prob = benchmarks::dim2();
        let mut rng = RngStream::new(5, StreamId::GainInit);
        let k0 = random_stabilizing_gain(&prob, 0.95, 0.2, &mut rng).unwrap();
        let sched = Schedules::default_two_timescale(2000);
        let params = Ac2tParams {
            trace_every: 500,
            ..Ac2tParams::new(sched, ProjectionRadii::new(200.0, 500.0).unwrap())
        };
        let a = two_timescale_nac(&prob, &k0, &params, 9).unwrap();
        let b = two_timescale_nac(&prob, &k0, &params, 9).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.final_gain, b.final_gain);
        let c = two_timescale_nac(&prob, &k0, &params, 10).unwrap();
        assert_ne!(a.final_gain, c.final_gain);
    }

    #[test]
    fn trace_grid_has_expected_length() {
        let prob = benchmarks::dim2();
        let k0 = prob.optimal().unwrap().gain;
        // ceil(T / trace_every) rows, final state always traced
        for (steps, every, expected) in [(10u64, 1000u64, 1usize), (2000, 500, 4), (2001, 500, 5)] {
            let sched = Schedules::default_two_timescale(steps);
            let params = Ac2tParams {
                trace_every: every,
                ..Ac2tParams::new(sched, ProjectionRadii::new(200.0, 500.0).unwrap())
            };
            let record = two_timescale_nac(&prob, &k0, &params, 3).unwrap();
            assert_eq!(record.rows.len(), expected);
            assert_eq!(record.rows.last().unwrap().t, steps);
        }
    }
}
