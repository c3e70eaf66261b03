//! Experiment configuration: JSON schema, validation, resolution against the
//! oracle (initial gains, projection radii), and the canonical config hash.
//!
//! Matrices are row-major nested arrays. The problem block may be written
//! inline or as an `"@path"` string referencing a JSON file with the same
//! shape, resolved relative to the config file. The config hash is taken
//! over the canonical serialization of the fully resolved configuration, so
//! it is insensitive to whitespace, key order, and the inline-versus-file
//! choice, and changes exactly when a semantically meaningful field changes.

use crate::error::{Error, Result};
use lqr_ac_core::algos::{
    Ac2tParams, DoubleLoopParams, InitDist, ProjectionRadii, Schedules, StabilityPolicy,
    ZerothOrderParams,
};
use lqr_ac_core::env::SamplingMode;
use lqr_ac_core::oracle::{evaluate_policy, random_stabilizing_gain, LqrProblem, PolicyGain};
use lqr_ac_core::rng::{RngStream, StreamId};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub algorithm: AlgorithmConfig,
    pub seeds: Vec<u64>,
    #[serde(default = "default_trace_every")]
    pub trace_every: u64,
    /// Default output directory for `run`; a CLI `--out` takes precedence.
    /// Not part of the config hash (it does not affect results).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<std::path::PathBuf>,
}

fn default_trace_every() -> u64 {
    1000
}

/// Inline problem matrices or a reference to a problem file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    File(String),
    Inline(ProblemMatrices),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemMatrices {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub d0: Vec<Vec<f64>>,
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlgorithmConfig {
    Ac2t(Ac2tConfig),
    DoubleLoop(DoubleLoopConfig),
    ZerothOrder(ZerothOrderConfig),
}

impl AlgorithmConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmConfig::Ac2t(_) => "ac2t",
            AlgorithmConfig::DoubleLoop(_) => "double-loop",
            AlgorithmConfig::ZerothOrder(_) => "zeroth-order",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ac2tConfig {
    pub actor_coeff: f64,
    pub actor_decay: f64,
    pub critic_coeff: f64,
    pub cost_coeff: f64,
    pub critic_decay: f64,
    pub steps: u64,
    #[serde(default)]
    pub sampling: SamplingConfig,
    /// Critic projection radius; defaults to a multiple of the initial
    /// gain's TD fixed-point norm.
    #[serde(default)]
    pub critic_radius: RadiusSpec,
    /// Cap for the average-cost tracker; defaults to a multiple of the
    /// initial gain's exact cost.
    #[serde(default)]
    pub cost_cap: RadiusSpec,
    pub gain_init: GainInit,
    #[serde(default)]
    pub on_instability: InstabilityPolicy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleLoopConfig {
    pub inner_steps: usize,
    pub outer_steps: usize,
    pub alpha_coeff: f64,
    pub policy_step: f64,
    #[serde(default)]
    pub primal_radius: RadiusSpec,
    #[serde(default)]
    pub dual_radius: RadiusSpec,
    pub gain_init: GainInit,
    #[serde(default)]
    pub on_instability: InstabilityPolicy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZerothOrderConfig {
    pub trajectories: usize,
    pub rollout_len: usize,
    pub perturbation: f64,
    pub policy_step: f64,
    pub outer_steps: usize,
    #[serde(default)]
    pub init_dist: InitDistConfig,
    #[serde(default)]
    pub dimension_scaled: bool,
    pub gain_init: GainInit,
    #[serde(default)]
    pub on_instability: InstabilityPolicy,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitDistConfig {
    #[default]
    ProcessNoise,
    Stationary,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InstabilityPolicy {
    #[default]
    Abort,
    Continue,
}

impl From<InstabilityPolicy> for StabilityPolicy {
    fn from(p: InstabilityPolicy) -> Self {
        match p {
            InstabilityPolicy::Abort => StabilityPolicy::Abort,
            InstabilityPolicy::Continue => StabilityPolicy::ContinueAndLog,
        }
    }
}

/// Sampling mode for the stationary draws of the two-timescale algorithm.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingConfig {
    #[default]
    Exact,
    Mixed {
        burn_in: usize,
    },
}

impl From<SamplingConfig> for SamplingMode {
    fn from(c: SamplingConfig) -> Self {
        match c {
            SamplingConfig::Exact => SamplingMode::Exact,
            SamplingConfig::Mixed { burn_in } => SamplingMode::Mixed(burn_in),
        }
    }
}

/// A projection radius: absolute, or a multiple of the natural per-problem
/// reference scale (the initial gain's TD fixed-point norm or exact cost).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusSpec {
    Absolute(f64),
    Multiple(f64),
}

impl Default for RadiusSpec {
    fn default() -> Self {
        RadiusSpec::Multiple(10.0)
    }
}

impl RadiusSpec {
    fn resolve(&self, reference: f64) -> f64 {
        match self {
            RadiusSpec::Absolute(v) => *v,
            RadiusSpec::Multiple(m) => m * reference,
        }
    }
}

/// Initial actor gain: an explicit matrix, or a seeded perturbation of the
/// optimal gain rescaled until the closed loop is comfortably stable.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum GainInit {
    Matrix(Vec<Vec<f64>>),
    PerturbOptimal {
        scale: f64,
        seed: u64,
        #[serde(default = "default_rho_max")]
        rho_max: f64,
    },
}

fn default_rho_max() -> f64 {
    0.95
}

/// Fully resolved experiment, ready to run.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub config: ExperimentConfig,
    pub problem: LqrProblem,
    pub initial_gain: PolicyGain,
    pub algorithm: ResolvedAlgorithm,
    pub seeds: Vec<u64>,
    pub trace_every: u64,
    pub hash: u64,
}

#[derive(Debug, Clone)]
pub enum ResolvedAlgorithm {
    Ac2t(Ac2tParams),
    DoubleLoop(DoubleLoopParams),
    ZerothOrder(ZerothOrderParams),
}

impl ResolvedAlgorithm {
    /// Environment samples consumed per traced unit of `t`.
    pub fn samples_per_step(&self) -> u64 {
        match self {
            ResolvedAlgorithm::Ac2t(_) => 1,
            ResolvedAlgorithm::DoubleLoop(p) => p.inner_steps as u64,
            ResolvedAlgorithm::ZerothOrder(p) => (p.trajectories * 2 * p.rollout_len) as u64,
        }
    }
}

/// Parse a JSON file into `T`, reporting the failing field path and line.
fn parse_json_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let inner = err.inner();
        Error::Config {
            path: path.to_path_buf(),
            location: format!(" ({}, line {})", err.path(), inner.line()),
            message: inner.to_string(),
        }
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_json_file(path)
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::Validation(format!("{what} has no rows")));
    }
    let cols = rows[0].len();
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Validation(format!(
            "{what} rows must be nonempty and of equal length"
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
}

impl ProblemMatrices {
    pub fn build(&self) -> Result<LqrProblem> {
        Ok(LqrProblem::new(
            matrix_from_rows(&self.a, "problem.a")?,
            matrix_from_rows(&self.b, "problem.b")?,
            matrix_from_rows(&self.q, "problem.q")?,
            matrix_from_rows(&self.r, "problem.r")?,
            matrix_from_rows(&self.d0, "problem.d0")?,
            self.sigma,
        )?)
    }

    pub fn from_problem(prob: &LqrProblem) -> Self {
        let rows = |m: &DMatrix<f64>| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect()
        };
        ProblemMatrices {
            a: rows(prob.a()),
            b: rows(prob.b()),
            q: rows(prob.q()),
            r: rows(prob.r()),
            d0: rows(prob.d0()),
            sigma: prob.sigma(),
        }
    }
}

/// Resolve the problem block, following an `@file` reference if present.
pub fn resolve_problem(spec: &ProblemSpec, config_dir: &Path) -> Result<ProblemMatrices> {
    match spec {
        ProblemSpec::Inline(m) => Ok(m.clone()),
        ProblemSpec::File(s) => {
            let rel = s.strip_prefix('@').ok_or_else(|| {
                Error::Validation(format!(
                    "problem must be an inline object or an \"@file\" reference, got {s:?}"
                ))
            })?;
            parse_json_file(&config_dir.join(rel))
        }
    }
}

/// 64-bit FNV-1a, the hash behind the config fingerprint.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Canonical hash of a resolved configuration: serde_json maps sort keys, so
/// the serialization is canonical once the problem block is inlined.
pub fn config_hash(
    matrices: &ProblemMatrices,
    algorithm: &AlgorithmConfig,
    seeds: &[u64],
    trace_every: u64,
) -> u64 {
    #[derive(Serialize)]
    struct Canonical<'a> {
        problem: &'a ProblemMatrices,
        algorithm: &'a AlgorithmConfig,
        seeds: &'a [u64],
        trace_every: u64,
    }
    let value = serde_json::to_value(Canonical {
        problem: matrices,
        algorithm,
        seeds,
        trace_every,
    })
    .expect("config serialization cannot fail");
    fnv1a(value.to_string().as_bytes())
}

fn resolve_gain_init(init: &GainInit, prob: &LqrProblem) -> Result<PolicyGain> {
    match init {
        GainInit::Matrix(rows) => {
            let gain = PolicyGain::new(prob, matrix_from_rows(rows, "gain_init.matrix")?)?;
            if !gain.is_stabilizing() {
                return Err(Error::Numerical(lqr_ac_core::Error::Unstable {
                    rho: gain.rho(),
                }));
            }
            Ok(gain)
        }
        GainInit::PerturbOptimal {
            scale,
            seed,
            rho_max,
        } => {
            let mut rng = RngStream::new(*seed, StreamId::GainInit);
            Ok(random_stabilizing_gain(prob, *rho_max, *scale, &mut rng)?)
        }
    }
}

/// Validate and resolve a parsed config into runnable form.
pub fn resolve(config: ExperimentConfig, config_dir: &Path) -> Result<ResolvedExperiment> {
    if config.seeds.is_empty() {
        return Err(Error::Validation("seeds must be nonempty".into()));
    }
    let mut sorted = config.seeds.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Validation("seeds must be distinct".into()));
    }
    if config.trace_every == 0 {
        return Err(Error::Validation("trace_every must be positive".into()));
    }

    let matrices = resolve_problem(&config.problem, config_dir)?;
    let problem = matrices.build()?;
    let hash = config_hash(&matrices, &config.algorithm, &config.seeds, config.trace_every);

    let (initial_gain, algorithm) = match &config.algorithm {
        AlgorithmConfig::Ac2t(c) => {
            let gain = resolve_gain_init(&c.gain_init, &problem)?;
            let eval = evaluate_policy(&problem, &gain)?;
            let radii = ProjectionRadii::new(
                c.critic_radius.resolve(eval.critic_target.norm()),
                c.cost_cap.resolve(eval.avg_cost),
            )?;
            let schedules = Schedules::new(
                c.actor_coeff,
                c.actor_decay,
                c.critic_coeff,
                c.cost_coeff,
                c.critic_decay,
                c.steps,
            )?;
            let params = Ac2tParams {
                schedules,
                projection: radii,
                sampling: c.sampling.into(),
                stability: c.on_instability.into(),
                trace_every: config.trace_every,
            };
            (gain, ResolvedAlgorithm::Ac2t(params))
        }
        AlgorithmConfig::DoubleLoop(c) => {
            let gain = resolve_gain_init(&c.gain_init, &problem)?;
            let eval = evaluate_policy(&problem, &gain)?;
            let reference = eval.critic_target.norm();
            let params = DoubleLoopParams {
                inner_steps: c.inner_steps,
                outer_steps: c.outer_steps,
                alpha_coeff: c.alpha_coeff,
                policy_step: c.policy_step,
                primal_radius: c.primal_radius.resolve(reference),
                dual_radius: c.dual_radius.resolve(reference),
                use_oracle_critic: false,
                stability: c.on_instability.into(),
                trace_every: config.trace_every,
            };
            if params.inner_steps == 0 {
                return Err(Error::Validation("inner_steps must be positive".into()));
            }
            (gain, ResolvedAlgorithm::DoubleLoop(params))
        }
        AlgorithmConfig::ZerothOrder(c) => {
            let gain = resolve_gain_init(&c.gain_init, &problem)?;
            let params = ZerothOrderParams {
                trajectories: c.trajectories,
                rollout_len: c.rollout_len,
                perturbation: c.perturbation,
                policy_step: c.policy_step,
                outer_steps: c.outer_steps,
                init_dist: match c.init_dist {
                    InitDistConfig::ProcessNoise => InitDist::ProcessNoise,
                    InitDistConfig::Stationary => InitDist::Stationary,
                },
                dimension_scaled: c.dimension_scaled,
                stability: c.on_instability.into(),
                trace_every: config.trace_every,
            };
            (gain, ResolvedAlgorithm::ZerothOrder(params))
        }
    };

    Ok(ResolvedExperiment {
        seeds: config.seeds.clone(),
        trace_every: config.trace_every,
        config,
        problem,
        initial_gain,
        algorithm,
        hash,
    })
}

/// Load and resolve in one step.
pub fn load_and_resolve(path: &Path) -> Result<ResolvedExperiment> {
    let config = load_config(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    resolve(config, dir)
}

/// Load a problem from either a full experiment config or a bare problem
/// file. Returns the config hash when a full config was given. Used by the
/// subcommands that only need the problem (`solve`, `check`).
pub fn load_problem_flexible(path: &Path) -> Result<(LqrProblem, Option<u64>)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|err| Error::Config {
            path: path.to_path_buf(),
            location: format!(" (line {})", err.line()),
            message: err.to_string(),
        })?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    if value.get("algorithm").is_some() {
        let config = load_config(path)?;
        let matrices = resolve_problem(&config.problem, dir)?;
        let hash = config_hash(
            &matrices,
            &config.algorithm,
            &config.seeds,
            config.trace_every,
        );
        Ok((matrices.build()?, Some(hash)))
    } else {
        let matrices: ProblemMatrices = parse_json_file(path)?;
        Ok((matrices.build()?, None))
    }
}
