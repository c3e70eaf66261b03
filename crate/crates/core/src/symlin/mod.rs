//! Dense symmetric-matrix linear algebra.
//!
//! The vectorization used everywhere in this crate is `svec`: the row-major
//! upper triangle of a symmetric matrix with off-diagonal entries scaled by
//! sqrt(2), so that `<svec(M), svec(N)> = <M, N>_F` and in particular
//! `|svec(M)|^2 = |M|_F^2`. [`smat`] is its inverse and [`sym_kron`] is the
//! symmetric Kronecker product acting on that representation:
//!
//! `(A (x)_s B) svec(S) = svec((A S B' + B S A') / 2)` for symmetric `S`.
//!
//! The module also carries the dense solvers the rest of the crate relies on:
//! discrete Lyapunov and Riccati fixed points, spectral radius, and Gaussian
//! moment/sampling helpers. Everything is sized for desk-scale systems
//! (dimensions in the tens, not hundreds).

mod gauss;
pub(crate) mod solve;

pub use gauss::{gaussian_quartic_moment, GaussianSampler};
pub use solve::{solve_dare, solve_discrete_lyapunov, spectral_radius, DareSolution};

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Symmetry tolerance applied when accepting matrix inputs. Inputs within
/// the tolerance are symmetrized as `(M + M')/2` rather than rejected.
pub const SYMMETRY_TOL: f64 = 1e-10;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Side length `n` recovered from a triangular length `n(n+1)/2`, if any.
pub fn triangular_dim(len: usize) -> Option<usize> {
    let n = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    (n * (n + 1) / 2 == len).then_some(n)
}

/// Vectorized symmetric matrix of source dimension `n`, length `n(n+1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymVec {
    data: DVector<f64>,
    dim: usize,
}

impl SymVec {
    /// Zero vector for symmetric `n x n` matrices.
    pub fn zeros(n: usize) -> Self {
        SymVec {
            data: DVector::zeros(n * (n + 1) / 2),
            dim: n,
        }
    }

    /// Wrap a raw vector whose length must be triangular.
    pub fn from_vector(data: DVector<f64>) -> Result<Self> {
        let dim = triangular_dim(data.len()).ok_or(Error::NotTriangular { len: data.len() })?;
        Ok(SymVec { data, dim })
    }

    /// Source matrix dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.len() == 0
    }

    pub fn data(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut DVector<f64> {
        &mut self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn dot(&self, other: &SymVec) -> f64 {
        self.data.dot(&other.data)
    }

    /// Euclidean-ball radial projection onto `|v| <= radius`.
    pub fn project_ball(&mut self, radius: f64) {
        let norm = self.data.norm();
        if norm > radius {
            self.data *= radius / norm;
        }
    }
}

/// Max absolute deviation from symmetry, `max_ij |M_ij - M_ji|`.
fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    dev
}

fn check_square(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Accept a square matrix as symmetric, returning the symmetrized copy.
pub fn require_symmetric(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(m, "symmetric input")?;
    let scale = m.amax().max(1.0);
    let dev = asymmetry(m);
    if dev > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric {
            deviation: dev,
            tolerance: SYMMETRY_TOL * scale,
        });
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Vectorize a symmetric matrix: row-major upper triangle, diagonal entries
/// unscaled, off-diagonal entries multiplied by sqrt(2).
pub fn svec(m: &DMatrix<f64>) -> Result<SymVec> {
    let m = require_symmetric(m)?;
    Ok(svec_unchecked(&m))
}

/// `svec` for a matrix already known symmetric; reads the upper triangle only.
pub fn svec_unchecked(m: &DMatrix<f64>) -> SymVec {
    let n = m.nrows();
    let mut data = DVector::zeros(n * (n + 1) / 2);
    let mut idx = 0;
    for i in 0..n {
        data[idx] = m[(i, i)];
        idx += 1;
        for j in (i + 1)..n {
            data[idx] = SQRT_2 * m[(i, j)];
            idx += 1;
        }
    }
    SymVec { data, dim: n }
}

/// Inverse of [`svec`]; the output is exactly symmetric.
pub fn smat(v: &SymVec) -> DMatrix<f64> {
    let n = v.dim;
    let mut m = DMatrix::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        m[(i, i)] = v.data[idx];
        idx += 1;
        for j in (i + 1)..n {
            let val = v.data[idx] / SQRT_2;
            m[(i, j)] = val;
            m[(j, i)] = val;
            idx += 1;
        }
    }
    m
}

/// Symmetric Kronecker product, stored as a dense matrix of side `n(n+1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymKron {
    data: DMatrix<f64>,
    dim: usize,
}

impl SymKron {
    /// Source matrix dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Apply to a vectorized symmetric matrix.
    pub fn apply(&self, s: &SymVec) -> Result<SymVec> {
        if s.dim != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "operator acts on dimension {}, vector has dimension {}",
                self.dim, s.dim
            )));
        }
        Ok(SymVec {
            data: &self.data * &s.data,
            dim: s.dim,
        })
    }
}

/// Symmetric Kronecker product of two square matrices of equal side.
///
/// Built column by column: the column for the basis element `E_l` is
/// `svec((A S_l B' + B S_l A') / 2)` with `S_l = smat(e_l)`.
pub fn sym_kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<SymKron> {
    check_square(a, "sym_kron left factor")?;
    check_square(b, "sym_kron right factor")?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "sym_kron factors must have equal side, got {} and {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let n = a.nrows();
    let size = n * (n + 1) / 2;
    let mut data = DMatrix::zeros(size, size);
    let mut basis = SymVec::zeros(n);
    for l in 0..size {
        basis.data[l] = 1.0;
        let s = smat(&basis);
        let prod = (a * &s * b.transpose() + b * &s * a.transpose()) * 0.5;
        data.set_column(l, &svec_unchecked(&prod).data);
        basis.data[l] = 0.0;
    }
    Ok(SymKron { data, dim: n })
}
