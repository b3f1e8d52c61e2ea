//! Matrix-free solvers and the small vector kernels they share.

mod cg;
mod gmres;

pub use cg::conjugate_gradient;
pub use gmres::{gmres, GmresOptions};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Square linear map applied to a vector.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `out = A x`.
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

/// Convergence summary of an iterative solve.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IterStats {
    pub iterations: usize,
    /// Relative residual `||b - A x|| / ||b||` (absolute when `b = 0`).
    pub residual: f64,
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Dense LU solve with partial pivoting.
pub fn dense_solve(matrix: DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    if matrix.ncols() != n || rhs.len() != n {
        return Err(Error::DimensionMismatch {
            what: "dense system",
            expected: n,
            actual: rhs.len(),
        });
    }
    let b = DVector::from_column_slice(rhs);
    matrix
        .lu()
        .solve(&b)
        .map(|x| x.as_slice().to_vec())
        .ok_or(Error::SolverDidNotConverge {
            iterations: 0,
            residual: f64::INFINITY,
        })
}
