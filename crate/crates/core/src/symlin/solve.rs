//! Spectral radius, discrete Lyapunov, and discrete Riccati solvers.

use crate::error::{Error, Result};
use crate::symlin::require_symmetric;
use nalgebra::{Cholesky, DMatrix, DVector};

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "spectral radius needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(m.complex_eigenvalues()
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max))
}

/// Side at or below which the Lyapunov equation is solved directly through
/// the vectorized linear system; above it a Smith doubling iteration is used.
const LYAPUNOV_DIRECT_MAX_DIM: usize = 10;
const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-10;

/// Solve `X = S + F X F'` for symmetric positive semidefinite `S`.
///
/// Requires `rho(F) < 1`; reports instability instead of diverging silently.
pub fn solve_discrete_lyapunov(f: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rho = spectral_radius(f)?;
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    let s = require_symmetric(s)?;
    if f.nrows() != s.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "Lyapunov operands must share a side, got {} and {}",
            f.nrows(),
            s.nrows()
        )));
    }
    solve_discrete_lyapunov_stable(f, &s)
}

/// Lyapunov solve for a closed loop already known stable (`rho(F) < 1`);
/// skips the eigenvalue check but still certifies the residual.
pub(crate) fn solve_discrete_lyapunov_stable(
    f: &DMatrix<f64>,
    s: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = f.nrows();
    let x = if n <= LYAPUNOV_DIRECT_MAX_DIM {
        lyapunov_direct(f, s)?
    } else {
        lyapunov_smith(f, s)?
    };
    let x = (&x + x.transpose()) * 0.5;
    let residual = (&x - s - f * &x * f.transpose()).norm();
    let scale = x.norm().max(1.0);
    if residual > LYAPUNOV_RESIDUAL_TOL * scale {
        return Err(Error::NonConvergence {
            what: "discrete Lyapunov solve".into(),
            iterations: 0,
            residual,
        });
    }
    Ok(x)
}

/// Direct solve of `(I - F (x) F) vec(X) = vec(S)` (column-major vec).
fn lyapunov_direct(f: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = f.nrows();
    let mut system = DMatrix::identity(n * n, n * n);
    system -= f.kronecker(f);
    let rhs = DVector::from_column_slice(s.as_slice());
    let sol = system.lu().solve(&rhs).ok_or(Error::Singular {
        context: "vectorized Lyapunov system".into(),
        condition: f64::INFINITY,
    })?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

/// Smith doubling: X <- X + F X F', F <- F^2 until the increment vanishes.
fn lyapunov_smith(f: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut x = s.clone();
    let mut fk = f.clone();
    for _ in 0..200 {
        let increment = &fk * &x * fk.transpose();
        let inc_norm = increment.norm();
        x += increment;
        fk = &fk * &fk;
        if inc_norm <= 1e-16 * x.norm().max(1.0) {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        what: "Smith iteration".into(),
        iterations: 200,
        residual: f64::NAN,
    })
}

const DARE_TOL: f64 = 1e-12;
const DARE_MAX_ITERS: usize = 100_000;
const DARE_RESIDUAL_TOL: f64 = 1e-9;

/// Solution of the discrete algebraic Riccati equation together with the
/// induced optimal feedback gain.
#[derive(Debug, Clone)]
pub struct DareSolution {
    /// Positive definite fixed point `P`.
    pub p: DMatrix<f64>,
    /// Gain `K = (R + B'PB)^{-1} B'PA`; the optimal policy is `u = -Kx`.
    pub gain: DMatrix<f64>,
    /// Frobenius norm of the Riccati residual at `P`.
    pub residual: f64,
    /// Spectral radius of `A - BK`.
    pub closed_loop_radius: f64,
    pub iterations: usize,
}

/// Solve `P = Q + A'PA - A'PB (B'PB + R)^{-1} B'PA` by fixed-point iteration
/// from `P = Q`.
///
/// `Q` must be positive semidefinite and `R` positive definite. Failure to
/// converge or an unstable resulting closed loop is reported as an error,
/// which covers non-stabilizable inputs.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DareSolution> {
    let d = a.nrows();
    let k = b.ncols();
    if a.ncols() != d || b.nrows() != d || q.nrows() != d || r.nrows() != k {
        return Err(Error::DimensionMismatch(format!(
            "DARE inputs inconsistent: A {}x{}, B {}x{}, Q {}x{}, R {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            q.nrows(),
            q.ncols(),
            r.nrows(),
            r.ncols()
        )));
    }
    let q = require_symmetric(q)?;
    let r = require_symmetric(r)?;
    if Cholesky::new(r.clone()).is_none() {
        return Err(Error::NotPositiveDefinite {
            context: "DARE cost matrix R".into(),
        });
    }

    let riccati_step = |p: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let btpb_r = &r + b.transpose() * p * b;
        let chol = Cholesky::new(btpb_r).ok_or(Error::NotPositiveDefinite {
            context: "R + B'PB during Riccati iteration".into(),
        })?;
        let btpa = b.transpose() * p * a;
        let next = &q + a.transpose() * p * a - a.transpose() * p * b * chol.solve(&btpa);
        Ok((&next + next.transpose()) * 0.5)
    };

    let mut p = q.clone();
    let mut iterations = DARE_MAX_ITERS;
    for it in 0..DARE_MAX_ITERS {
        let next = riccati_step(&p)?;
        let delta = (&next - &p).norm();
        p = next;
        if delta <= DARE_TOL * p.norm().max(1.0) {
            iterations = it + 1;
            break;
        }
    }

    let residual = (&p - riccati_step(&p)?).norm();
    if residual > DARE_RESIDUAL_TOL {
        return Err(Error::NonConvergence {
            what: "Riccati fixed-point iteration".into(),
            iterations,
            residual,
        });
    }

    let gain_gram = &r + b.transpose() * &p * b;
    let chol = Cholesky::new(gain_gram).ok_or(Error::NotPositiveDefinite {
        context: "R + B'P*B".into(),
    })?;
    let gain = chol.solve(&(b.transpose() * &p * a));
    let closed_loop_radius = spectral_radius(&(a - b * &gain))?;
    if closed_loop_radius >= 1.0 {
        return Err(Error::Unstable {
            rho: closed_loop_radius,
        });
    }

    Ok(DareSolution {
        p,
        gain,
        residual,
        closed_loop_radius,
        iterations,
    })
}
