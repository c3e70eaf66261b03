//! Gaussian moment identities and covariance sampling.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::symlin::require_symmetric;
use nalgebra::{Cholesky, DMatrix, DVector};

/// Fourth-moment identity for a standard Gaussian vector `g`:
/// `E[g'Mg g'Ng] = 2 Tr(MN) + Tr(M) Tr(N)` for symmetric `M`, `N`.
pub fn gaussian_quartic_moment(m: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<f64> {
    let m = require_symmetric(m)?;
    let n = require_symmetric(n)?;
    if m.nrows() != n.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "quartic moment factors must share a side, got {} and {}",
            m.nrows(),
            n.nrows()
        )));
    }
    Ok(2.0 * (&m * &n).trace() + m.trace() * n.trace())
}

/// Draws `N(0, C)` vectors through a Cholesky factor of `C`.
///
/// Construction fails if the covariance is not positive definite; no silent
/// regularization is applied.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn new(covariance: &DMatrix<f64>) -> Result<Self> {
        let cov = require_symmetric(covariance)?;
        let chol = Cholesky::new(cov).ok_or(Error::NotPositiveDefinite {
            context: "Gaussian sampling covariance".into(),
        })?;
        Ok(GaussianSampler {
            factor: chol.unpack(),
        })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample(&self, rng: &mut RngStream) -> DVector<f64> {
        &self.factor * rng.normal_vector(self.factor.nrows())
    }
}
