//! Deterministic CSV emission and parsing.
//!
//! Schema v1: one `# lqr-ac v1 ...` comment line carrying run metadata, a
//! header row, then data rows. Floats are written with Rust's shortest
//! round-trip formatting, so identical runs produce identical bytes and
//! parsing recovers the exact values.

use crate::error::{Error, Result};
use lqr_ac_core::algos::{RunRecord, TraceRow};
use std::fmt::Write as _;
use std::path::Path;

pub const SCHEMA_TAG: &str = "# lqr-ac v1";

pub const RUN_COLUMNS: [&str; 10] = [
    "t",
    "samples",
    "critic_err_sq",
    "critic_err_avg",
    "actor_gap",
    "actor_gap_avg",
    "rel_gain_err",
    "rho_closed_loop",
    "eta",
    "avg_cost",
];

/// Metric columns (everything after `t` and `samples`).
pub const METRIC_COLUMNS: [&str; 8] = [
    "critic_err_sq",
    "critic_err_avg",
    "actor_gap",
    "actor_gap_avg",
    "rel_gain_err",
    "rho_closed_loop",
    "eta",
    "avg_cost",
];

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

pub fn render_run_csv(record: &RunRecord) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{SCHEMA_TAG} kind=run config={:016x} seed={} status={} stability_violations={} projection_violations={} step_bound_violations={}",
        record.config_hash,
        record.seed,
        record.status.label(),
        record.stability_violations,
        record.projection_violations,
        record.step_bound_violations,
    );
    let _ = writeln!(out, "{}", RUN_COLUMNS.join(","));
    for row in &record.rows {
        let _ = write!(out, "{},{}", row.t, row.samples);
        for v in metric_values(row) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_run_csv(path: &Path, record: &RunRecord) -> Result<()> {
    std::fs::write(path, render_run_csv(record)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A parsed per-seed CSV: the metadata line fields plus raw rows.
#[derive(Debug, Clone)]
pub struct ParsedRun {
    pub config_hash: u64,
    pub seed: u64,
    pub status: String,
    pub rows: Vec<(u64, u64, [f64; 8])>,
}

pub fn parse_run_csv(path: &Path, text: &str) -> Result<ParsedRun> {
    let bad = |message: String| Error::Config {
        path: path.to_path_buf(),
        location: String::new(),
        message,
    };
    let mut lines = text.lines();
    let meta = lines
        .next()
        .ok_or_else(|| bad("empty CSV".into()))?
        .strip_prefix(SCHEMA_TAG)
        .ok_or_else(|| bad(format!("missing `{SCHEMA_TAG}` comment line")))?
        .trim()
        .to_string();
    let mut config_hash = 0u64;
    let mut seed = 0u64;
    let mut status = String::new();
    for field in meta.split_whitespace() {
        if let Some((key, value)) = field.split_once('=') {
            match key {
                "config" => {
                    config_hash = u64::from_str_radix(value, 16)
                        .map_err(|e| bad(format!("bad config hash: {e}")))?;
                }
                "seed" => {
                    seed = value
                        .parse()
                        .map_err(|e| bad(format!("bad seed: {e}")))?;
                }
                "status" => status = value.to_string(),
                _ => {}
            }
        }
    }
    let header = lines.next().ok_or_else(|| bad("missing header row".into()))?;
    if header != RUN_COLUMNS.join(",") {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != RUN_COLUMNS.len() {
            return Err(bad(format!("row {i} has {} fields", fields.len())));
        }
        let t = fields[0]
            .parse()
            .map_err(|e| bad(format!("row {i} t: {e}")))?;
        let samples = fields[1]
            .parse()
            .map_err(|e| bad(format!("row {i} samples: {e}")))?;
        let mut metrics = [0.0f64; 8];
        for (slot, field) in metrics.iter_mut().zip(&fields[2..]) {
            *slot = field
                .parse()
                .map_err(|e| bad(format!("row {i} metric: {e}")))?;
        }
        rows.push((t, samples, metrics));
    }
    Ok(ParsedRun {
        config_hash,
        seed,
        status,
        rows,
    })
}

pub fn read_run_csv(path: &Path) -> Result<ParsedRun> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_run_csv(path, &text)
}

/// Mean and 95% confidence half-width per metric, per grid point.
#[derive(Debug, Clone)]
pub struct AggregateTable {
    pub config_hash: u64,
    pub seeds_total: usize,
    pub completed: usize,
    pub excluded: usize,
    /// Rows of `(t, samples, [mean, ci] x metrics)`.
    pub rows: Vec<(u64, u64, Vec<f64>)>,
}

pub fn render_aggregate_csv(table: &AggregateTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{SCHEMA_TAG} kind=aggregate config={:016x} seeds={} completed={} excluded={}",
        table.config_hash, table.seeds_total, table.completed, table.excluded,
    );
    let mut header: Vec<String> = vec!["t".into(), "samples".into()];
    for m in METRIC_COLUMNS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_ci"));
    }
    let _ = writeln!(out, "{}", header.join(","));
    for (t, samples, stats) in &table.rows {
        let _ = write!(out, "{t},{samples}");
        for v in stats {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_aggregate_csv(path: &Path, table: &AggregateTable) -> Result<()> {
    std::fs::write(path, render_aggregate_csv(table)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
