//! Small matrix helpers shared by the filter implementations.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Force exact symmetry by averaging with the transpose.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Relative symmetry check: max |M - Mᵀ| against max |M|.
pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

/// Cholesky factorization, failing with a numerical error.
pub fn cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone())
        .ok_or_else(|| Error::numerical("covariance is not positive definite"))
}

/// Cholesky with a single jitter retry: on failure add 1e-9·I once and
/// try again; a second failure is a hard numerical error.
pub fn cholesky_with_repair(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let repaired = m + DMatrix::identity(m.nrows(), m.ncols()) * 1e-9;
    Cholesky::new(repaired)
        .ok_or_else(|| Error::numerical("covariance not positive definite after jitter repair"))
}

/// Validate that a matrix is symmetric (1e-10 relative) and positive definite.
pub fn check_spd(m: &DMatrix<f64>) -> Result<()> {
    if !is_symmetric(m, 1e-10) {
        return Err(Error::invalid_spec("matrix is not symmetric"));
    }
    cholesky(&symmetrize(m)).map(|_| ())
}
