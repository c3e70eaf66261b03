//! Acceptance suite.
//!
//! One test per criterion, each printing a `PASS criterion N` line (visible
//! with `--nocapture`). Criteria:
//!
//! 1. Oracle identity suite on both benchmark systems and 20 random
//!    stabilizing gains each, at the documented tolerances.
//! 2. Monte-Carlo consistency of the simulator against the closed forms
//!    over one million samples.
//! 3. Two-timescale actor-critic reproduction on the 2-state benchmark:
//!    ten seeds at one million iterations; running-average actor gap and
//!    critic error must decay, the final gap to at most a tenth of its
//!    early value, with zero stability violations, per seed.
//! 4. Sample-efficiency ordering against both baselines at matched sample
//!    budgets (long suite, `--ignored`).
//! 5. Byte-identical CSV output for identical config and seed.
//! 6. Projection and actor-step invariants on every iteration.

use lqr_ac::checks::{run_checks, CheckOptions};
use lqr_ac::config::load_and_resolve;
use lqr_ac::csv_io::read_run_csv;
use lqr_ac::runner::{run_experiment, run_seed};
use lqr_ac_core::algos::{
    double_loop_nac, two_timescale_nac, zeroth_order_npg, Ac2tParams, DoubleLoopParams,
    ProjectionRadii, RunRecord, Schedules, ZerothOrderParams,
};
use lqr_ac_core::benchmarks;
use lqr_ac_core::oracle::{evaluate_policy, random_stabilizing_gain, PolicyGain};
use lqr_ac_core::rng::{RngStream, StreamId};
use std::fs;
use std::path::{Path, PathBuf};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn criterion_1_oracle_identity_suite() {
    let opts = CheckOptions {
        include_mc: false,
        gains: 20,
        ..CheckOptions::default()
    };
    for (name, prob) in [("dim2", benchmarks::dim2()), ("dim4", benchmarks::dim4())] {
        let report = run_checks(&prob, &opts).unwrap();
        print!("{}", report.render());
        assert!(report.all_passed(), "identity suite failed on {name}");
        // the tolerances pinned by the criterion
        let find = |n: &str| report.items.iter().find(|i| i.name == n).unwrap();
        assert!(find("gradient-finite-difference").measured <= 1e-5);
        assert!(find("td-fixed-point").measured <= 1e-8);
        assert!(find("almost-smoothness").measured <= 1e-8);
        assert!(find("gradient-domination").measured <= 1e-9);
        assert!(find("dare-residual").measured <= 1e-9);
    }
    println!("PASS criterion 1: oracle identity suite at stated tolerances");
}

#[test]
fn criterion_2_monte_carlo_consistency() {
    let opts = CheckOptions {
        include_mc: true,
        mc_samples: 1_000_000,
        ..CheckOptions::default()
    };
    let report = run_checks(&benchmarks::dim2(), &opts).unwrap();
    print!("{}", report.render());
    assert!(report.all_passed(), "Monte-Carlo consistency failed");
    for name in [
        "td-matrix-mc",
        "td-offset-mc",
        "joint-covariance-mc",
        "quartic-moment-mc",
    ] {
        let item = report.items.iter().find(|i| i.name == name).unwrap();
        assert!(
            item.measured <= 3.0,
            "{name} exceeded three standard errors: {}",
            item.measured
        );
    }
    println!("PASS criterion 2: Monte-Carlo consistency within three standard errors");
}

#[test]
fn criterion_3_two_timescale_reproduction() {
    let exp = load_and_resolve(&configs_dir().join("dim2_ac2t.json")).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let summary = run_experiment(&exp, tmp.path(), 2).unwrap();
    assert_eq!(summary.completed, 10, "all ten seeds must complete");
    assert_eq!(summary.excluded, 0);

    for record in &summary.records {
        let early = record
            .rows
            .iter()
            .find(|r| r.t == 1000)
            .expect("trace row at t=1000");
        let last = record.rows.last().unwrap();
        assert_eq!(last.t, 1_000_000);

        assert!(
            last.actor_gap_avg < early.actor_gap_avg,
            "seed {}: running-average actor gap must decrease",
            record.seed
        );
        assert!(
            last.critic_err_avg < early.critic_err_avg,
            "seed {}: running-average critic error must decrease",
            record.seed
        );
        let ratio = last.actor_gap_avg / early.actor_gap_avg;
        assert!(
            ratio <= 0.1,
            "seed {}: final gap {:.4} must be at most a tenth of the early {:.4}",
            record.seed,
            last.actor_gap_avg,
            early.actor_gap_avg
        );
        assert_eq!(
            record.stability_violations, 0,
            "seed {}: stability violations",
            record.seed
        );
        assert_eq!(record.projection_violations, 0);
        assert_eq!(record.step_bound_violations, 0);
        for row in &record.rows {
            assert!(row.rho_closed_loop < 1.0);
        }
        println!(
            "seed {}: gap_avg {:.4} -> {:.5} (ratio {:.4}), critic_avg {:.2} -> {:.3}",
            record.seed,
            early.actor_gap_avg,
            last.actor_gap_avg,
            ratio,
            early.critic_err_avg,
            last.critic_err_avg
        );
    }
    println!(
        "PASS criterion 3: ten seeds at one million iterations, decay ratio at most 0.1, \
         zero stability violations"
    );
}

/// First sample count at which the aggregate mean relative gain error drops
/// to the threshold; `None` when it never does within the budget.
fn first_crossing(records: &[RunRecord], threshold: f64) -> Option<u64> {
    let completed: Vec<&RunRecord> = records.iter().filter(|r| r.status.is_completed()).collect();
    if completed.is_empty() {
        return None;
    }
    let rows = completed[0].rows.len();
    for i in 0..rows {
        if completed.iter().any(|r| r.rows.len() <= i) {
            break;
        }
        let mean: f64 = completed.iter().map(|r| r.rows[i].rel_gain_err).sum::<f64>()
            / completed.len() as f64;
        if mean <= threshold {
            return Some(completed[0].rows[i].samples);
        }
    }
    None
}

#[test]
#[ignore = "long suite (several minutes): cargo test -p lqr-ac --test acceptance -- --ignored"]
fn criterion_4_sample_efficiency_ordering() {
    const BUDGET: u64 = 8_000_000;
    const THRESHOLD: f64 = 0.08;
    let seeds: Vec<u64> = (0..10).collect();

    let prob = benchmarks::dim2();
    let mut rng = RngStream::new(1, StreamId::GainInit);
    let k0 = random_stabilizing_gain(&prob, 0.95, 0.2, &mut rng).unwrap();
    let eval0 = evaluate_policy(&prob, &k0).unwrap();

    // single-sample two-timescale actor-critic
    let radii =
        ProjectionRadii::new(2.0 * eval0.critic_target.norm(), 10.0 * eval0.avg_cost).unwrap();
    let p1 = Ac2tParams {
        trace_every: 10_000,
        ..Ac2tParams::new(Schedules::default_two_timescale(BUDGET), radii)
    };
    let runs1: Vec<RunRecord> = seeds
        .iter()
        .map(|&s| two_timescale_nac(&prob, &k0, &p1, s).unwrap())
        .collect();

    // zeroth-order baseline, benchmark parameters
    let p3 = ZerothOrderParams {
        perturbation: 0.1,
        policy_step: 0.01,
        ..ZerothOrderParams::new(5000, 20, (BUDGET / 200_000) as usize)
    };
    let runs3: Vec<RunRecord> = seeds
        .iter()
        .map(|&s| zeroth_order_npg(&prob, &k0, &p3, s).unwrap())
        .collect();

    // double-loop baseline, benchmark parameters (lower exploration)
    let prob02 = prob.with_sigma(0.2).unwrap();
    let k0b = PolicyGain::new(&prob02, k0.matrix().clone()).unwrap();
    let eval0b = evaluate_policy(&prob02, &k0b).unwrap();
    let p2 = DoubleLoopParams {
        alpha_coeff: 0.01,
        policy_step: 0.05,
        ..DoubleLoopParams::new(
            500_000,
            (BUDGET / 500_000) as usize,
            10.0 * eval0b.critic_target.norm(),
        )
    };
    let runs2: Vec<RunRecord> = seeds
        .iter()
        .map(|&s| double_loop_nac(&prob02, &k0b, &p2, s).unwrap())
        .collect();

    let c1 = first_crossing(&runs1, THRESHOLD);
    let c3 = first_crossing(&runs3, THRESHOLD);
    let c2 = first_crossing(&runs2, THRESHOLD);
    println!(
        "first crossing of mean relative gain error {THRESHOLD}: \
         two-timescale {c1:?}, zeroth-order {c3:?}, double-loop {c2:?} (budget {BUDGET})"
    );
    let crossed_1 = c1.expect("the two-timescale method must reach the threshold");
    assert!(
        c3.is_none_or(|c| crossed_1 < c),
        "two-timescale must cross before the zeroth-order baseline"
    );
    assert!(
        c2.is_none_or(|c| crossed_1 < c),
        "two-timescale must cross before the double-loop baseline"
    );
    // the comparison is informative only if at least one baseline crossed
    assert!(
        c3.is_some() || c2.is_some(),
        "no baseline crossed within budget; raise the budget or threshold"
    );
    println!("PASS criterion 4: sample-efficiency ordering at matched budgets");
}

#[test]
fn criterion_5_byte_identical_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let write = |name: &str, contents: &str| {
        let path = tmp.path().join(name);
        fs::write(&path, contents).unwrap();
        path
    };
    let system = r#""problem": {
        "a": [[0.0, 1.0], [1.0, 0.0]],
        "b": [[0.0, 1.0], [1.0, 0.0]],
        "q": [[9.0, 2.0], [2.0, 1.0]],
        "r": [[1.0, 2.0], [2.0, 8.0]],
        "d0": [[1.0, 0.0], [0.0, 1.0]],
        "sigma": 1.0
    }"#;
    let configs = [
        (
            "ac2t.json",
            format!(
                r#"{{ {system},
                "algorithm": {{ "ac2t": {{
                    "actor_coeff": 0.005, "actor_decay": 0.6,
                    "critic_coeff": 0.01, "cost_coeff": 0.1, "critic_decay": 0.4,
                    "steps": 10000, "critic_radius": {{ "multiple": 2.0 }},
                    "gain_init": {{ "perturb-optimal": {{ "scale": 0.2, "seed": 1 }} }}
                }} }},
                "seeds": [0, 1], "trace_every": 2000 }}"#
            ),
        ),
        (
            "dl.json",
            format!(
                r#"{{ {system},
                "algorithm": {{ "double-loop": {{
                    "inner_steps": 2000, "outer_steps": 3,
                    "alpha_coeff": 0.01, "policy_step": 0.01,
                    "gain_init": {{ "perturb-optimal": {{ "scale": 0.1, "seed": 1 }} }}
                }} }},
                "seeds": [0, 1], "trace_every": 1 }}"#
            ),
        ),
        (
            "zo.json",
            format!(
                r#"{{ {system},
                "algorithm": {{ "zeroth-order": {{
                    "trajectories": 100, "rollout_len": 10,
                    "perturbation": 0.1, "policy_step": 0.005, "outer_steps": 4,
                    "gain_init": {{ "perturb-optimal": {{ "scale": 0.1, "seed": 1 }} }}
                }} }},
                "seeds": [0, 1], "trace_every": 1 }}"#
            ),
        ),
    ];
    for (name, contents) in configs {
        let config = write(name, &contents);
        let exp = load_and_resolve(&config).unwrap();
        let out_a = tmp.path().join(format!("{name}.a"));
        let out_b = tmp.path().join(format!("{name}.b"));
        run_experiment(&exp, &out_a, 2).unwrap();
        run_experiment(&exp, &out_b, 1).unwrap();
        for entry in fs::read_dir(&out_a).unwrap() {
            let file = entry.unwrap().file_name();
            let a = fs::read(out_a.join(&file)).unwrap();
            let b = fs::read(out_b.join(&file)).unwrap();
            assert_eq!(a, b, "{name}/{file:?} differs between identical runs");
        }
    }
    println!("PASS criterion 5: byte-identical CSVs for identical config and seed");
}

#[test]
fn criterion_6_projection_and_step_invariants() {
    // medium two-timescale run with per-iteration invariant counters
    let exp = load_and_resolve(&configs_dir().join("dim2_ac2t.json")).unwrap();
    let mut shortened = exp.clone();
    if let lqr_ac::config::ResolvedAlgorithm::Ac2t(p) = &mut shortened.algorithm {
        p.schedules.steps = 100_000;
    } else {
        unreachable!()
    }
    for seed in [0u64, 1, 2] {
        let record = run_seed(&shortened, seed).unwrap();
        assert!(record.status.is_completed());
        assert_eq!(record.projection_violations, 0, "critic ball / cost clamp");
        assert_eq!(record.step_bound_violations, 0, "actor movement bound");
        assert_eq!(record.stability_violations, 0);
    }

    // and the cost-tracker column stays inside its cap in the emitted CSV
    let tmp = tempfile::tempdir().unwrap();
    let summary = run_experiment(&shortened, tmp.path(), 2).unwrap();
    let cap = match &shortened.algorithm {
        lqr_ac::config::ResolvedAlgorithm::Ac2t(p) => p.projection.cost_cap,
        _ => unreachable!(),
    };
    for path in &summary.seed_paths {
        let parsed = read_run_csv(path).unwrap();
        for (_, _, metrics) in &parsed.rows {
            let eta = metrics[6];
            assert!((0.0..=cap).contains(&eta), "eta column within [0, cap]");
        }
    }
    println!("PASS criterion 6: projection and step-bound invariants on every iteration");
}
