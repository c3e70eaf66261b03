//! The property-check suite behind `lqr-ac check`: every closed-form
//! identity the toolkit relies on, verified numerically on the configured
//! problem, plus Monte-Carlo consistency of the simulator against the
//! analytic layer. Failures are report content, not errors.

use crate::error::Result;
use lqr_ac_core::env::{feature, policy_action, LqrEnv, SamplingMode};
use lqr_ac_core::oracle::{
    almost_smoothness_residual, evaluate_policy, gradient_domination_bounds,
    joint_covariance_norm_bound, joint_stationary_covariance_via_lyapunov,
    random_stabilizing_gain, theory_diagnostics, LqrProblem, PolicyEvaluation, PolicyGain,
};
use lqr_ac_core::rng::{RngStream, StreamId};
use lqr_ac_core::symlin::{gaussian_quartic_moment, GaussianSampler};
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Sample count for the Monte-Carlo consistency checks.
    pub mc_samples: u64,
    /// Random stabilizing gains per identity check.
    pub gains: usize,
    /// Seed for gain sampling and Monte-Carlo draws.
    pub seed: u64,
    /// Run the Monte-Carlo section (the identity section always runs).
    pub include_mc: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            mc_samples: 1_000_000,
            gains: 20,
            seed: 18,
            include_mc: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    /// Measured residual or z-score, whatever the tolerance is stated in.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            let _ = writeln!(
                out,
                "{} {:<28} measured {:>12.4e}  tolerance {:>9.1e}  {}",
                if item.passed { "PASS" } else { "FAIL" },
                item.name,
                item.measured,
                item.tolerance,
                item.detail
            );
        }
        let _ = writeln!(
            out,
            "{}/{} checks passed",
            self.items.iter().filter(|i| i.passed).count(),
            self.items.len()
        );
        out
    }

    fn push(&mut self, name: &'static str, measured: f64, tolerance: f64, detail: String) {
        self.items.push(CheckItem {
            name,
            passed: measured <= tolerance && measured.is_finite(),
            measured,
            tolerance,
            detail,
        });
    }
}

fn sample_gains(prob: &LqrProblem, count: usize, seed: u64) -> Result<Vec<PolicyGain>> {
    let mut rng = RngStream::new(seed, StreamId::Verification);
    let mut gains = Vec::with_capacity(count);
    for _ in 0..count {
        gains.push(random_stabilizing_gain(prob, 0.95, 0.5, &mut rng)?);
    }
    Ok(gains)
}

/// Run the full suite on one problem instance.
pub fn run_checks(prob: &LqrProblem, opts: &CheckOptions) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    let optimal = prob.optimal()?;
    let gains = sample_gains(prob, opts.gains, opts.seed)?;
    let evals: Vec<PolicyEvaluation> = gains
        .iter()
        .map(|g| evaluate_policy(prob, g))
        .collect::<lqr_ac_core::Result<_>>()?;

    identity_checks(prob, &optimal.gain, &gains, &evals, &mut report)?;
    if opts.include_mc {
        monte_carlo_checks(prob, &gains[0], &evals[0], opts, &mut report)?;
    }
    Ok(report)
}

fn identity_checks(
    prob: &LqrProblem,
    optimal_gain: &PolicyGain,
    gains: &[PolicyGain],
    evals: &[PolicyEvaluation],
    report: &mut CheckReport,
) -> Result<()> {
    let dare = prob.optimal()?;
    report.push(
        "dare-residual",
        dare.dare.residual,
        1e-9,
        format!(
            "closed-loop radius {:.4}, {} iterations",
            dare.gain.rho(),
            dare.dare.iterations
        ),
    );

    // gradient versus central finite differences of the analytic cost
    let h = 1e-5;
    let mut worst_fd: f64 = 0.0;
    for (gain, eval) in gains.iter().zip(evals) {
        let mut fd = DMatrix::zeros(prob.input_dim(), prob.state_dim());
        for i in 0..prob.input_dim() {
            for j in 0..prob.state_dim() {
                let mut up = gain.matrix().clone();
                up[(i, j)] += h;
                let mut down = gain.matrix().clone();
                down[(i, j)] -= h;
                let j_up = evaluate_policy(prob, &PolicyGain::new(prob, up)?)?.avg_cost;
                let j_down = evaluate_policy(prob, &PolicyGain::new(prob, down)?)?.avg_cost;
                fd[(i, j)] = (j_up - j_down) / (2.0 * h);
            }
        }
        worst_fd = worst_fd.max((&fd - &eval.grad).norm() / eval.grad.norm().max(1.0));
    }
    report.push(
        "gradient-finite-difference",
        worst_fd,
        1e-5,
        format!("central differences, h={h:.0e}, {} gains", gains.len()),
    );

    // natural gradient = gradient preconditioned by the state covariance
    let mut worst_nat: f64 = 0.0;
    for eval in evals {
        let solved = eval
            .state_cov
            .clone()
            .lu()
            .solve(&eval.grad.transpose())
            .expect("stationary covariance is positive definite")
            .transpose()
            / 2.0;
        worst_nat = worst_nat.max(
            (&solved - &eval.natural_grad).amax() / eval.natural_grad.amax().max(1.0),
        );
    }
    report.push(
        "natural-gradient-identity",
        worst_nat,
        1e-10,
        String::new(),
    );

    let mut worst_td: f64 = 0.0;
    for eval in evals {
        worst_td = worst_td.max(eval.td_fixed_point_residual());
    }
    report.push(
        "td-fixed-point",
        worst_td,
        1e-8,
        "A_K svec(q_form) = b_K".into(),
    );

    let opt_eval = evaluate_policy(prob, optimal_gain)?;
    report.push(
        "optimal-gain-stationarity",
        opt_eval.natural_grad.amax(),
        1e-8,
        "natural gradient vanishes at the Riccati gain".into(),
    );

    let mut worst_smooth: f64 = 0.0;
    for pair in gains.chunks(2) {
        if let [a, b] = pair {
            worst_smooth = worst_smooth.max(almost_smoothness_residual(prob, a, b)?);
        }
    }
    report.push(
        "almost-smoothness",
        worst_smooth,
        1e-8,
        "exact cost-difference expansion, relative".into(),
    );

    let mut worst_sandwich = f64::NEG_INFINITY;
    let mut worst_optimality = f64::NEG_INFINITY;
    for gain in gains {
        let bounds = gradient_domination_bounds(prob, gain, optimal_gain)?;
        let scale = bounds.gap.abs().max(1.0);
        worst_sandwich = worst_sandwich
            .max((bounds.lower - bounds.gap) / scale)
            .max((bounds.gap - bounds.upper) / scale);
        worst_optimality = worst_optimality.max(-bounds.gap);
    }
    report.push(
        "gradient-domination",
        worst_sandwich,
        1e-9,
        "two-sided bound, worst normalized violation".into(),
    );
    report.push(
        "global-optimality",
        worst_optimality,
        1e-8,
        "J(K) >= J(K*) on sampled gains".into(),
    );

    let mut worst_cov_routes: f64 = 0.0;
    for gain in gains.iter().take(5) {
        let block = lqr_ac_core::oracle::joint_stationary_covariance(prob, gain)?;
        let lyap = joint_stationary_covariance_via_lyapunov(prob, gain)?;
        worst_cov_routes =
            worst_cov_routes.max((&block - &lyap).amax() / block.amax().max(1.0));
    }
    report.push(
        "joint-covariance-routes",
        worst_cov_routes,
        1e-9,
        "block formula vs Lyapunov fixed point".into(),
    );

    let mut worst_floor = f64::NEG_INFINITY;
    let mut worst_norm_bound = f64::NEG_INFINITY;
    for (gain, eval) in gains.iter().zip(evals) {
        let diag = theory_diagnostics(
            prob,
            gain.matrix().singular_values().max(),
            gain.rho().max(1e-6),
        )?;
        let smin = eval.td_matrix.singular_values().min();
        worst_floor = worst_floor.max(diag.td_curvature_floor - smin);
        let bound = joint_covariance_norm_bound(prob, gain)?;
        worst_norm_bound =
            worst_norm_bound.max(eval.joint_cov.singular_values().max() - bound);
    }
    report.push(
        "td-curvature-floor",
        worst_floor,
        0.0,
        "sigma_min(A_K) at or above the analytic floor".into(),
    );
    report.push(
        "joint-covariance-norm-bound",
        worst_norm_bound,
        0.0,
        String::new(),
    );
    Ok(())
}

/// z-score of a Monte-Carlo mean against a target, guarding zero variance.
fn z_score(mean: f64, target: f64, variance: f64, n: f64) -> f64 {
    let se = (variance.max(0.0) / n).sqrt();
    let dev = (mean - target).abs();
    if se == 0.0 {
        if dev <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        dev / se
    }
}

fn monte_carlo_checks(
    prob: &LqrProblem,
    gain: &PolicyGain,
    eval: &PolicyEvaluation,
    opts: &CheckOptions,
    report: &mut CheckReport,
) -> Result<()> {
    let env = LqrEnv::new(prob)?;
    let n = opts.mc_samples;
    let nf = n as f64;
    let joint = prob.joint_dim();
    let flen = prob.feature_dim();

    // one pass of iid stationary transitions feeds the TD-operator, offset,
    // and joint-covariance checks
    let sampler = GaussianSampler::new(&eval.state_cov)?;
    let mut rng = RngStream::new(opts.seed, StreamId::Verification);
    let mut a_sum: DMatrix<f64> = DMatrix::zeros(flen, flen);
    let mut a_sum_sq: DMatrix<f64> = DMatrix::zeros(flen, flen);
    let mut b_sum: DVector<f64> = DVector::zeros(flen);
    let mut b_sum_sq: DVector<f64> = DVector::zeros(flen);
    let mut cov_sum: DMatrix<f64> = DMatrix::zeros(joint, joint);
    let mut cov_sum_sq: DMatrix<f64> = DMatrix::zeros(joint, joint);
    for _ in 0..n {
        let x = sampler.sample(&mut rng);
        let tr = env.transition(gain, x, &mut rng)?;
        let phi = feature(&tr.x, &tr.u);
        let phi_next = feature(&tr.x_next, &tr.u_next);
        let diff = phi.data() - phi_next.data();
        for i in 0..flen {
            let pi = phi.data()[i];
            for j in 0..flen {
                let v = pi * diff[j];
                a_sum[(i, j)] += v;
                a_sum_sq[(i, j)] += v * v;
            }
            let bv = (tr.cost - eval.avg_cost) * pi;
            b_sum[i] += bv;
            b_sum_sq[i] += bv * bv;
        }
        let mut theta = DVector::zeros(joint);
        theta.rows_mut(0, tr.x.len()).copy_from(&tr.x);
        theta.rows_mut(tr.x.len(), tr.u.len()).copy_from(&tr.u);
        for i in 0..joint {
            for j in 0..joint {
                let v = theta[i] * theta[j];
                cov_sum[(i, j)] += v;
                cov_sum_sq[(i, j)] += v * v;
            }
        }
    }

    let mut worst_a: f64 = 0.0;
    for i in 0..flen {
        for j in 0..flen {
            let mean = a_sum[(i, j)] / nf;
            let var = a_sum_sq[(i, j)] / nf - mean * mean;
            worst_a = worst_a.max(z_score(mean, eval.td_matrix[(i, j)], var, nf));
        }
    }
    report.push(
        "td-matrix-mc",
        worst_a,
        3.0,
        format!("worst entry z-score, {n} samples"),
    );

    let mut worst_b: f64 = 0.0;
    for i in 0..flen {
        let mean = b_sum[i] / nf;
        let var = b_sum_sq[i] / nf - mean * mean;
        worst_b = worst_b.max(z_score(mean, eval.td_offset[i], var, nf));
    }
    report.push(
        "td-offset-mc",
        worst_b,
        3.0,
        format!("worst entry z-score, {n} samples"),
    );

    let mut worst_cov: f64 = 0.0;
    for i in 0..joint {
        for j in 0..joint {
            let mean = cov_sum[(i, j)] / nf;
            let var = cov_sum_sq[(i, j)] / nf - mean * mean;
            worst_cov = worst_cov.max(z_score(mean, eval.joint_cov[(i, j)], var, nf));
        }
    }
    report.push(
        "joint-covariance-mc",
        worst_cov,
        3.0,
        format!("worst entry z-score, {n} samples"),
    );

    // Gaussian quartic moment identity on a seeded random symmetric pair
    let mut qrng = RngStream::new(opts.seed ^ 0x9e3779b97f4a7c15, StreamId::Verification);
    let dim = joint.max(3);
    let raw_m = DMatrix::from_fn(dim, dim, |_, _| qrng.standard_normal());
    let raw_n = DMatrix::from_fn(dim, dim, |_, _| qrng.standard_normal());
    let sym_m = (&raw_m + raw_m.transpose()) * 0.5;
    let sym_n = (&raw_n + raw_n.transpose()) * 0.5;
    let exact = gaussian_quartic_moment(&sym_m, &sym_n)?;
    let (mut qsum, mut qsum_sq) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let g = qrng.normal_vector(dim);
        let v = (&sym_m * &g).dot(&g) * (&sym_n * &g).dot(&g);
        qsum += v;
        qsum_sq += v * v;
    }
    let qmean = qsum / nf;
    let qvar = qsum_sq / nf - qmean * qmean;
    report.push(
        "quartic-moment-mc",
        z_score(qmean, exact, qvar, nf),
        3.0,
        format!("{n} standard-normal draws"),
    );

    // long-run average cost along the closed-loop chain, batch means
    let mut crng = RngStream::new(opts.seed ^ 0x517cc1b727220a95, StreamId::Verification);
    let batches = 100usize;
    let batch_len = (n as usize / batches).max(1);
    let mut warm = DVector::zeros(prob.state_dim());
    let mut x = env.sample_stationary(gain, SamplingMode::Exact, &mut warm, &mut crng)?;
    let mut batch_means = Vec::with_capacity(batches);
    for _ in 0..batches {
        let mut sum = 0.0;
        for _ in 0..batch_len {
            let u = policy_action(gain.matrix(), &x, prob.sigma(), &mut crng)?;
            let (cost, x_next) = env.step(&x, &u, &mut crng)?;
            sum += cost;
            x = x_next;
        }
        batch_means.push(sum / batch_len as f64);
    }
    let mean = batch_means.iter().sum::<f64>() / batches as f64;
    let var = batch_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (batches - 1) as f64;
    report.push(
        "stationary-cost-mc",
        z_score(mean, eval.avg_cost, var, batches as f64),
        3.0,
        format!("batch-means over {} chain steps", batches * batch_len),
    );

    // centered Q-function: stationary mean is zero
    let mut zrng = RngStream::new(opts.seed ^ 0x2545f4914f6cdd1d, StreamId::Verification);
    let (mut qc_sum, mut qc_sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let x = sampler.sample(&mut zrng);
        let u = policy_action(gain.matrix(), &x, prob.sigma(), &mut zrng)?;
        let q = eval.q_value(&x, &u);
        qc_sum += q;
        qc_sum_sq += q * q;
    }
    let qc_mean = qc_sum / nf;
    let qc_var = qc_sum_sq / nf - qc_mean * qc_mean;
    report.push(
        "q-centering-mc",
        z_score(qc_mean, 0.0, qc_var, nf),
        3.0,
        format!("{n} stationary draws"),
    );

    // Bellman identity at sampled state-action pairs, successor values
    // estimated by inner Monte Carlo
    let mut brng = RngStream::new(opts.seed ^ 0x6a09e667f3bcc909, StreamId::Verification);
    let points = 1000usize;
    let inner = 2000usize;
    let mut worst_bellman: f64 = 0.0;
    let centered_value = |x: &DVector<f64>| {
        (&eval.value_matrix * x).dot(x) - (&eval.value_matrix * &eval.state_cov).trace()
    };
    for _ in 0..points {
        let x = sampler.sample(&mut brng);
        let u = policy_action(gain.matrix(), &x, prob.sigma(), &mut brng)?;
        let q = eval.q_value(&x, &u);
        let cost = prob.cost(&x, &u);
        let (mut vsum, mut vsum_sq) = (0.0f64, 0.0f64);
        for _ in 0..inner {
            let (_, x_next) = env.step(&x, &u, &mut brng)?;
            let v = centered_value(&x_next);
            vsum += v;
            vsum_sq += v * v;
        }
        let vmean = vsum / inner as f64;
        let vvar = vsum_sq / inner as f64 - vmean * vmean;
        let bellman = cost - eval.avg_cost + vmean;
        worst_bellman = worst_bellman.max(z_score(q, bellman, vvar, inner as f64));
    }
    report.push(
        "bellman-mc",
        worst_bellman,
        5.0,
        format!("worst z over {points} points, {inner} successor draws each"),
    );

    Ok(())
}
