//! Seeded generation of stabilizing gains around the optimum.

use crate::error::{Error, Result};
use crate::oracle::{LqrProblem, PolicyGain};
use crate::rng::RngStream;
use nalgebra::DMatrix;

/// Draw a stabilizing gain as `K* + dK` with `dK` a Gaussian perturbation
/// rescaled (halving on rejection) until the closed-loop spectral radius is
/// at most `rho_max`.
///
/// `scale` sets the initial perturbation size relative to `max(|K*|_F, 1)`.
pub fn random_stabilizing_gain(
    prob: &LqrProblem,
    rho_max: f64,
    scale: f64,
    rng: &mut RngStream,
) -> Result<PolicyGain> {
    if !(0.0..1.0).contains(&rho_max) || rho_max <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "target spectral radius must lie in (0, 1), got {rho_max}"
        )));
    }
    if scale < 0.0 {
        return Err(Error::InvalidParam(format!(
            "perturbation scale must be nonnegative, got {scale}"
        )));
    }
    let optimal = prob.optimal()?;
    let k_star = optimal.gain.matrix();
    let (rows, cols) = (prob.input_dim(), prob.state_dim());

    let raw = DMatrix::from_fn(rows, cols, |_, _| rng.standard_normal());
    let raw_norm = raw.norm();
    if raw_norm == 0.0 || scale == 0.0 {
        return Ok(optimal.gain);
    }
    let mut delta = raw * (scale * k_star.norm().max(1.0) / raw_norm);

    // halve on rejection; terminates because K* itself satisfies the target
    for _ in 0..200 {
        let candidate = PolicyGain::new(prob, k_star + &delta)?;
        if candidate.rho() <= rho_max {
            return Ok(candidate);
        }
        delta *= 0.5;
    }
    Ok(optimal.gain)
}
