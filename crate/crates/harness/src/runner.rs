//! Multi-seed execution: dispatch seeds to a worker pool, collect records,
//! write per-seed CSVs, and aggregate in a deterministic post-pass.

use crate::aggregate::aggregate;
use crate::config::{ResolvedAlgorithm, ResolvedExperiment};
use crate::csv_io::{write_aggregate_csv, write_run_csv};
use crate::error::{Error, Result};
use lqr_ac_core::algos::{double_loop_nac, two_timescale_nac, zeroth_order_npg, RunRecord};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct RunSummary {
    pub records: Vec<RunRecord>,
    pub completed: usize,
    pub excluded: usize,
    pub seed_paths: Vec<PathBuf>,
    pub aggregate_path: PathBuf,
}

/// Execute one seed of the resolved experiment.
pub fn run_seed(exp: &ResolvedExperiment, seed: u64) -> Result<RunRecord> {
    let mut record = match &exp.algorithm {
        ResolvedAlgorithm::Ac2t(params) => {
            two_timescale_nac(&exp.problem, &exp.initial_gain, params, seed)?
        }
        ResolvedAlgorithm::DoubleLoop(params) => {
            double_loop_nac(&exp.problem, &exp.initial_gain, params, seed)?
        }
        ResolvedAlgorithm::ZerothOrder(params) => {
            zeroth_order_npg(&exp.problem, &exp.initial_gain, params, seed)?
        }
    };
    record.config_hash = exp.hash;
    Ok(record)
}

/// Run every seed (workers in parallel), write one CSV per seed plus the
/// aggregate CSV, and report exclusions.
pub fn run_experiment(
    exp: &ResolvedExperiment,
    out_dir: &Path,
    workers: usize,
) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Validation(format!("cannot build worker pool: {e}")))?;
    let results: Vec<Result<RunRecord>> = pool.install(|| {
        exp.seeds
            .par_iter()
            .map(|&seed| run_seed(exp, seed))
            .collect()
    });
    let mut records = Vec::with_capacity(results.len());
    for result in results {
        records.push(result?);
    }
    // deterministic output order regardless of worker scheduling
    records.sort_by_key(|r| r.seed);

    let mut seed_paths = Vec::with_capacity(records.len());
    for record in &records {
        let path = out_dir.join(format!("seed_{}.csv", record.seed));
        write_run_csv(&path, record)?;
        seed_paths.push(path);
    }

    let table = aggregate(&records, exp.hash)?;
    let aggregate_path = out_dir.join("aggregate.csv");
    write_aggregate_csv(&aggregate_path, &table)?;

    Ok(RunSummary {
        completed: table.completed,
        excluded: table.excluded,
        records,
        seed_paths,
        aggregate_path,
    })
}

/// Default worker count.
pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
