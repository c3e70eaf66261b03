//! `lqr-ac`: solve, simulate, and verify noisy-LQR policy learning.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 property-suite failure.

use clap::{Parser, Subcommand};
use lqr_ac::checks::{run_checks, CheckOptions};
use lqr_ac::config::{load_and_resolve, load_problem_flexible};
use lqr_ac::runner::{default_workers, run_experiment};
use lqr_ac_core::oracle::evaluate_policy;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lqr-ac", version, about = "Noisy-LQR actor-critic toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem exactly through the Riccati equation.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the configured learning experiment over all seeds and write CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for per-seed and aggregate CSV files; falls back
        /// to the config's `out` field.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the oracle-identity and Monte-Carlo property suite.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// Sample count for Monte-Carlo checks.
        #[arg(long, default_value_t = 1_000_000)]
        mc_samples: u64,
        /// Skip the Monte-Carlo section.
        #[arg(long)]
        skip_mc: bool,
    },
}

fn matrix_lines(name: &str, m: &nalgebra::DMatrix<f64>) -> String {
    let mut out = format!("{name} =\n");
    for i in 0..m.nrows() {
        out.push_str("  [");
        for j in 0..m.ncols() {
            if j > 0 {
                out.push_str(", ");
            }
            out.push_str(&format!("{:>12.8}", m[(i, j)]));
        }
        out.push_str("]\n");
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> lqr_ac::Result<ExitCode> {
    match cli.command {
        Command::Solve { config } => {
            let (problem, hash) = load_problem_flexible(&config)?;
            let optimal = problem.optimal()?;
            let eval = evaluate_policy(&problem, &optimal.gain)?;
            print!("{}", matrix_lines("P*", &optimal.value_matrix));
            print!("{}", matrix_lines("K*", optimal.gain.matrix()));
            println!("J(K*)            = {:.10}", eval.avg_cost);
            println!("rho(A - B K*)    = {:.10}", optimal.gain.rho());
            println!("Riccati residual = {:.3e}", optimal.dare.residual);
            if let Some(hash) = hash {
                println!("config           = {hash:016x}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            config,
            out,
            workers,
        } => {
            let exp = load_and_resolve(&config)?;
            let out = out.or_else(|| exp.config.out.clone()).ok_or_else(|| {
                lqr_ac::Error::Validation(
                    "no output directory: pass --out or set \"out\" in the config".into(),
                )
            })?;
            let workers = workers.unwrap_or_else(default_workers);
            let summary = run_experiment(&exp, &out, workers)?;
            println!(
                "{} seeds completed, {} excluded (algorithm {}, config {:016x})",
                summary.completed,
                summary.excluded,
                exp.config.algorithm.name(),
                exp.hash
            );
            for path in &summary.seed_paths {
                println!("  wrote {}", path.display());
            }
            println!("  wrote {}", summary.aggregate_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            config,
            mc_samples,
            skip_mc,
        } => {
            let (problem, _) = load_problem_flexible(&config)?;
            let opts = CheckOptions {
                mc_samples,
                include_mc: !skip_mc,
                ..CheckOptions::default()
            };
            let report = run_checks(&problem, &opts)?;
            print!("{}", report.render());
            if report.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(4))
            }
        }
    }
}
