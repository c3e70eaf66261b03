//! The three learners and their shared machinery: step-size schedules,
//! projected critic state, and the natural-gradient read-out of a quadratic
//! critic.

mod ac2t;
mod double_loop;
mod trace;
mod zeroth_order;

pub use ac2t::{two_timescale_nac, Ac2tParams};
pub use double_loop::{double_loop_nac, DoubleLoopParams};
pub use trace::{MetricContext, RunRecord, Termination, TraceBuffer, TraceRow};
pub use zeroth_order::{uniform_frobenius_sphere, zeroth_order_npg, InitDist, ZerothOrderParams};

use crate::error::{Error, Result};
use crate::symlin::{smat, SymVec};
use nalgebra::DMatrix;

/// Polynomially decaying step sizes on two timescales: the actor moves at
/// `c_actor / (1+t)^actor_decay`, the critic and the average-cost tracker at
/// `c / (1+t)^critic_decay` with `critic_decay < actor_decay`, so the critic
/// is the faster loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedules {
    pub actor_coeff: f64,
    pub actor_decay: f64,
    pub critic_coeff: f64,
    pub cost_coeff: f64,
    pub critic_decay: f64,
    /// Total iteration count `T`.
    pub steps: u64,
}

impl Schedules {
    /// Validated construction. The actor coefficient may be zero (frozen
    /// actor, used by diagnostics); everything else must be positive, decays
    /// must lie in (0, 1), and the two-timescale ordering
    /// `critic_decay < actor_decay` must hold.
    pub fn new(
        actor_coeff: f64,
        actor_decay: f64,
        critic_coeff: f64,
        cost_coeff: f64,
        critic_decay: f64,
        steps: u64,
    ) -> Result<Self> {
        if actor_coeff < 0.0 || !actor_coeff.is_finite() {
            return Err(Error::InvalidParam(format!(
                "actor coefficient must be nonnegative, got {actor_coeff}"
            )));
        }
        for (name, value) in [("critic", critic_coeff), ("cost", cost_coeff)] {
            if value <= 0.0 || !value.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "{name} coefficient must be positive, got {value}"
                )));
            }
        }
        for (name, value) in [("actor", actor_decay), ("critic", critic_decay)] {
            if !(0.0 < value && value < 1.0) {
                return Err(Error::InvalidParam(format!(
                    "{name} decay exponent must lie in (0, 1), got {value}"
                )));
            }
        }
        if critic_decay >= actor_decay {
            return Err(Error::InvalidParam(format!(
                "two-timescale ordering requires critic decay < actor decay, got {critic_decay} >= {actor_decay}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidParam("step count must be positive".into()));
        }
        Ok(Schedules {
            actor_coeff,
            actor_decay,
            critic_coeff,
            cost_coeff,
            critic_decay,
            steps,
        })
    }

    /// Defaults matching the experiment setup: actor 0.005/(1+t)^0.6,
    /// critic 0.01/(1+t)^0.4, cost tracker 0.1/(1+t)^0.4.
    pub fn default_two_timescale(steps: u64) -> Self {
        Schedules::new(0.005, 0.6, 0.01, 0.1, 0.4, steps).expect("defaults are valid")
    }

    /// Actor step `alpha_t`.
    pub fn alpha(&self, t: u64) -> f64 {
        self.actor_coeff / ((1 + t) as f64).powf(self.actor_decay)
    }

    /// Critic step `beta_t`.
    pub fn beta(&self, t: u64) -> f64 {
        self.critic_coeff / ((1 + t) as f64).powf(self.critic_decay)
    }

    /// Average-cost step `gamma_t`.
    pub fn gamma(&self, t: u64) -> f64 {
        self.cost_coeff / ((1 + t) as f64).powf(self.critic_decay)
    }
}

/// Projection radii for the critic iterates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionRadii {
    /// Euclidean ball radius for the critic vector.
    pub critic_radius: f64,
    /// The average-cost estimate is clamped to `[0, cost_cap]`.
    pub cost_cap: f64,
}

impl ProjectionRadii {
    pub fn new(critic_radius: f64, cost_cap: f64) -> Result<Self> {
        if critic_radius <= 0.0 || cost_cap <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "projection radii must be positive, got critic {critic_radius}, cost {cost_cap}"
            )));
        }
        Ok(ProjectionRadii {
            critic_radius,
            cost_cap,
        })
    }
}

/// What to do when an iterate leaves the stabilizing set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StabilityPolicy {
    /// Stop and report; the run record carries the failure point.
    #[default]
    Abort,
    /// Record the violation and keep going (robustness studies). Exact
    /// stationary sampling falls back to the last stabilizing gain while the
    /// closed loop stays unstable.
    ContinueAndLog,
}

/// Projected critic: the quadratic-form weight vector together with the
/// average-cost tracker.
#[derive(Debug, Clone)]
pub struct CriticState {
    pub omega: SymVec,
    pub eta: f64,
    radii: ProjectionRadii,
}

impl CriticState {
    /// Fresh critic at zero.
    pub fn new(joint_dim: usize, radii: ProjectionRadii) -> Self {
        CriticState {
            omega: SymVec::zeros(joint_dim),
            eta: 0.0,
            radii,
        }
    }

    pub fn radii(&self) -> ProjectionRadii {
        self.radii
    }

    /// Average-cost update with clamping: `eta <- clamp(eta + g (c - eta))`.
    pub fn update_eta(&mut self, gamma: f64, cost: f64) {
        self.eta = (self.eta + gamma * (cost - self.eta)).clamp(0.0, self.radii.cost_cap);
    }

    /// Critic update with ball projection: `w <- proj(w + b * d * phi)`.
    pub fn update_omega(&mut self, beta: f64, td_error: f64, phi: &SymVec) {
        self.omega.data_mut().axpy(beta * td_error, phi.data(), 1.0);
        self.omega.project_ball(self.radii.critic_radius);
    }

    /// True when both projection invariants hold (up to rounding slack).
    pub fn within_bounds(&self) -> bool {
        self.omega.norm() <= self.radii.critic_radius * (1.0 + 1e-12)
            && (0.0..=self.radii.cost_cap * (1.0 + 1e-12)).contains(&self.eta)
    }
}

/// Natural-gradient estimate read off a quadratic critic: with
/// `M = smat(w)` partitioned over (state, action), the estimate is
/// `M^{22} K - M^{21}`.
pub fn natural_gradient_estimate(omega: &SymVec, gain: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = gain.ncols();
    let k = gain.nrows();
    if omega.dim() != d + k {
        return Err(Error::DimensionMismatch(format!(
            "critic is over dimension {} but the gain needs {}",
            omega.dim(),
            d + k
        )));
    }
    let m = smat(omega);
    let action_block = m.view((d, d), (k, k));
    let cross_block = m.view((d, 0), (k, d));
    Ok(action_block * gain - cross_block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    #[test]
    fn schedule_values_are_exact() {
        let s = Schedules::new(0.005, 0.6, 0.01, 0.1, 0.4, 100).unwrap();
        assert_relative_eq!(s.alpha(0), 0.005);
        assert_relative_eq!(s.beta(0), 0.01);
        assert_relative_eq!(s.gamma(0), 0.1);
        assert_relative_eq!(s.alpha(99), 0.005 / 100f64.powf(0.6), epsilon = 1e-15);
        // the timescale separation ratio is exactly (c_a/c_b)(1+t)^{-(da-db)}
        for t in [0u64, 1, 10, 1000] {
            let ratio = s.alpha(t) / s.beta(t);
            let expected = (0.005 / 0.01) * ((1 + t) as f64).powf(-(0.6 - 0.4));
            assert_relative_eq!(ratio, expected, epsilon = 1e-13);
        }
    }

    #[test]
    fn schedule_rejects_wrong_ordering() {
        assert!(Schedules::new(0.005, 0.4, 0.01, 0.1, 0.6, 100).is_err());
        assert!(Schedules::new(0.005, 0.4, 0.01, 0.1, 0.4, 100).is_err());
        // frozen actor is allowed
        assert!(Schedules::new(0.0, 0.6, 0.01, 0.1, 0.4, 100).is_ok());
    }

    #[test]
    fn critic_projections_bind() {
        let radii = ProjectionRadii::new(1.0, 5.0).unwrap();
        let mut critic = CriticState::new(2, radii);
        let phi = SymVec::from_vector(DVector::from_vec(vec![10.0, 0.0, 0.0])).unwrap();
        critic.update_omega(1.0, 1.0, &phi);
        assert_relative_eq!(critic.omega.norm(), 1.0, epsilon = 1e-12);
        critic.update_eta(1.0, 100.0);
        assert_eq!(critic.eta, 5.0);
        critic.update_eta(1.0, -40.0);
        assert_eq!(critic.eta, 0.0);
        assert!(critic.within_bounds());
    }

    #[test]
    fn natural_gradient_readout_is_linear() {
        let gain = DMatrix::from_row_slice(1, 2, &[0.3, -0.2]);
        let w1 = SymVec::from_vector(DVector::from_vec(vec![1.0, 2.0, 0.5, 1.5, -0.5, 2.5]))
            .unwrap();
        let w2 = SymVec::from_vector(DVector::from_vec(vec![0.0, 1.0, -1.0, 0.5, 2.0, -1.0]))
            .unwrap();
        let sum = SymVec::from_vector(w1.data() + w2.data()).unwrap();
        let lhs = natural_gradient_estimate(&sum, &gain).unwrap();
        let rhs = natural_gradient_estimate(&w1, &gain).unwrap()
            + natural_gradient_estimate(&w2, &gain).unwrap();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-14);

        let zero = SymVec::zeros(3);
        assert_eq!(
            natural_gradient_estimate(&zero, &gain).unwrap(),
            DMatrix::zeros(1, 2)
        );
    }

    #[test]
    fn natural_gradient_rejects_wrong_length() {
        let gain = DMatrix::zeros(2, 2);
        let w = SymVec::zeros(3);
        assert!(natural_gradient_estimate(&w, &gain).is_err());
    }
}
