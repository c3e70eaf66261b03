//! Cross-seed aggregation: per-grid-point means with normal-approximation
//! 95% confidence half-widths, computed only over completed runs.

use crate::csv_io::AggregateTable;
use crate::error::{Error, Result};
use lqr_ac_core::algos::{RunRecord, TraceRow};

/// `1.96 * sample std / sqrt(n)`; zero for a single run.
fn ci_half_width(values: &[f64], mean: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    1.96 * (var / n as f64).sqrt()
}

fn metric_values(row: &TraceRow) -> [f64; 8] {
    [
        row.critic_err_sq,
        row.critic_err_avg,
        row.actor_gap,
        row.actor_gap_avg,
        row.rel_gain_err,
        row.rho_closed_loop,
        row.eta,
        row.avg_cost,
    ]
}

/// Aggregate completed records over their shared trace grid. Aborted runs
/// are excluded and only counted.
pub fn aggregate(records: &[RunRecord], config_hash: u64) -> Result<AggregateTable> {
    let mut completed: Vec<&RunRecord> = records
        .iter()
        .filter(|r| r.status.is_completed())
        .collect();
    completed.sort_by_key(|r| r.seed);
    let excluded = records.len() - completed.len();

    let mut rows = Vec::new();
    if let Some(first) = completed.first() {
        let grid: Vec<(u64, u64)> = first.rows.iter().map(|r| (r.t, r.samples)).collect();
        for rec in &completed {
            let this: Vec<(u64, u64)> = rec.rows.iter().map(|r| (r.t, r.samples)).collect();
            if this != grid {
                return Err(Error::Validation(format!(
                    "seed {} has a different trace grid; cannot aggregate",
                    rec.seed
                )));
            }
        }
        for (i, &(t, samples)) in grid.iter().enumerate() {
            let mut stats = Vec::with_capacity(16);
            for m in 0..8 {
                let values: Vec<f64> = completed
                    .iter()
                    .map(|rec| metric_values(&rec.rows[i])[m])
                    .collect();
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                stats.push(mean);
                stats.push(ci_half_width(&values, mean));
            }
            rows.push((t, samples, stats));
        }
    }

    Ok(AggregateTable {
        config_hash,
        seeds_total: records.len(),
        completed: completed.len(),
        excluded,
        rows,
    })
}
