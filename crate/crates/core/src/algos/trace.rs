//! Per-run trace records shared by all three learners.
//!
//! Metrics are evaluated on a fixed iteration grid rather than every step,
//! because each evaluation point costs two Lyapunov solves against the
//! oracle. Running averages are taken over the grid rows, so every row is
//! recomputable from the raw columns of the rows at or before it.

use crate::error::Result;
use crate::oracle::{evaluate_policy, LqrProblem, OptimalSolution, PolicyGain};
use crate::symlin::SymVec;
use nalgebra::DMatrix;

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Completed,
    /// The closed loop left the stabilizing set and the run was configured
    /// to abort.
    Unstable { t: u64, rho: f64 },
    /// An iterate stopped being finite.
    NonFinite { t: u64 },
    /// A covariance estimate became numerically singular (zeroth-order
    /// method only).
    SingularCovariance { t: u64 },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }

    pub fn label(&self) -> String {
        match self {
            Termination::Completed => "completed".into(),
            Termination::Unstable { t, rho } => format!("unstable(t={t},rho={rho:.4})"),
            Termination::NonFinite { t } => format!("non-finite(t={t})"),
            Termination::SingularCovariance { t } => format!("singular-covariance(t={t})"),
        }
    }
}

/// One evaluation point. `NaN` marks metrics a given algorithm does not
/// produce (e.g. the zeroth-order method has no critic).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    /// Iteration count at which the row was taken (state after `t` updates).
    pub t: u64,
    /// Cumulative environment samples consumed by then.
    pub samples: u64,
    /// Squared critic error `|w - w*_{K_t}|^2`.
    pub critic_err_sq: f64,
    /// Running mean of `critic_err_sq` over trace rows so far.
    pub critic_err_avg: f64,
    /// Optimality gap `J(K_t) - J(K*)`.
    pub actor_gap: f64,
    /// Running mean of `actor_gap` over trace rows so far.
    pub actor_gap_avg: f64,
    /// Relative gain error `|K_t - K*|_F / |K*|_F`.
    pub rel_gain_err: f64,
    /// Closed-loop spectral radius at `K_t`.
    pub rho_closed_loop: f64,
    /// Average-cost estimate carried by the learner.
    pub eta: f64,
    /// Exact average cost `J(K_t)`.
    pub avg_cost: f64,
}

/// Result of one seeded run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    /// Hash of the configuration that produced the run; attached by the
    /// harness, zero when produced directly from library calls.
    pub config_hash: u64,
    pub seed: u64,
    pub rows: Vec<TraceRow>,
    pub status: Termination,
    /// Iterations at which `rho(A - BK_t) >= 1` was observed.
    pub stability_violations: u64,
    /// Post-update projection bound violations (should always be zero).
    pub projection_violations: u64,
    /// Violations of the per-step actor movement bound
    /// `|K_{t+1} - K_t| <= alpha_t (|K_t| + 1) w_radius` (should be zero).
    pub step_bound_violations: u64,
    /// Gain at termination.
    pub final_gain: DMatrix<f64>,
}

/// Oracle context needed to score iterates, fixed per problem instance.
pub struct MetricContext {
    prob: LqrProblem,
    optimal: OptimalSolution,
    optimal_gain_norm: f64,
}

impl MetricContext {
    pub fn new(prob: &LqrProblem) -> Result<Self> {
        let optimal = prob.optimal()?;
        let optimal_gain_norm = optimal.gain.matrix().norm();
        Ok(MetricContext {
            prob: prob.clone(),
            optimal,
            optimal_gain_norm,
        })
    }

    pub fn optimal(&self) -> &OptimalSolution {
        &self.optimal
    }

    /// Score one iterate. `critic` and `eta` are omitted by learners that do
    /// not carry them. Metrics that need a stabilizing gain are `NaN` when
    /// the iterate is unstable (continue-and-log runs only).
    pub fn row(
        &self,
        t: u64,
        samples: u64,
        gain: &PolicyGain,
        critic: Option<&SymVec>,
        eta: Option<f64>,
    ) -> TraceRow {
        let (critic_err_sq, actor_gap, avg_cost) = if gain.is_stabilizing() {
            match evaluate_policy(&self.prob, gain) {
                Ok(eval) => {
                    let err = critic.map_or(f64::NAN, |w| {
                        (w.data() - eval.critic_target.data()).norm_squared()
                    });
                    (err, eval.avg_cost - self.optimal.avg_cost, eval.avg_cost)
                }
                Err(_) => (f64::NAN, f64::NAN, f64::NAN),
            }
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        TraceRow {
            t,
            samples,
            critic_err_sq,
            critic_err_avg: f64::NAN,
            actor_gap,
            actor_gap_avg: f64::NAN,
            rel_gain_err: (gain.matrix() - self.optimal.gain.matrix()).norm()
                / self.optimal_gain_norm,
            rho_closed_loop: gain.rho(),
            eta: eta.unwrap_or(f64::NAN),
            avg_cost,
        }
    }
}

/// Accumulates rows and maintains the running averages over the trace grid.
#[derive(Debug, Default)]
pub struct TraceBuffer {
    rows: Vec<TraceRow>,
    critic_err_sum: f64,
    actor_gap_sum: f64,
}

impl TraceBuffer {
    pub fn new() -> Self {
        TraceBuffer::default()
    }

    pub fn push(&mut self, mut row: TraceRow) {
        self.critic_err_sum += row.critic_err_sq;
        self.actor_gap_sum += row.actor_gap;
        let n = (self.rows.len() + 1) as f64;
        row.critic_err_avg = self.critic_err_sum / n;
        row.actor_gap_avg = self.actor_gap_sum / n;
        self.rows.push(row);
    }

    pub fn into_rows(self) -> Vec<TraceRow> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_at(t: u64, raw: f64) -> TraceRow {
        TraceRow {
            t,
            samples: t,
            critic_err_sq: raw,
            critic_err_avg: f64::NAN,
            actor_gap: 2.0 * raw,
            actor_gap_avg: f64::NAN,
            rel_gain_err: 0.0,
            rho_closed_loop: 0.5,
            eta: 0.0,
            avg_cost: 0.0,
        }
    }

    #[test]
    fn running_averages_match_prefix_means() {
        let mut buf = TraceBuffer::new();
        for (t, raw) in [(1u64, 4.0), (2, 2.0), (3, 0.0)] {
            buf.push(row_at(t, raw));
        }
        let rows = buf.into_rows();
        assert_eq!(rows[0].critic_err_avg, 4.0);
        assert_eq!(rows[1].critic_err_avg, 3.0);
        assert_eq!(rows[2].critic_err_avg, 2.0);
        assert_eq!(rows[2].actor_gap_avg, 4.0);
    }
}
