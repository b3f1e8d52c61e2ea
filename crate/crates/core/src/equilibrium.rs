//! The Friedkin-Johnsen equilibrium `y*(w)`, the unique solution of
//! `A(w) y = s` with `A(w) = I + diag(W 1) - W`.
//!
//! `A(w)` is strictly row diagonally dominant for every non-negative `W`, so
//! it is invertible and the plain FJ iteration
//! `y_i <- (s_i + sum_j w_ij y_j) / (1 + sum_j w_ij)` contracts to the same
//! point. The default solver is restarted GMRES; a dense LU path serves small
//! systems and as a fallback.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::linalg::{self, GmresOptions, IterStats, LinearOperator};

/// `A(w)` in split form (diagonal plus the stored `W`) together with `s`.
#[derive(Clone, Debug)]
pub struct EquilibriumSystem {
    topology: Topology,
    diag: Vec<f64>,
    s: Vec<f64>,
}

impl EquilibriumSystem {
    pub fn n(&self) -> usize {
        self.topology.n()
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// `A_ii = 1 + sum_j w_ij`.
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn rhs(&self) -> &[f64] {
        &self.s
    }

    /// `out = A y`.
    pub fn apply(&self, y: &[f64], out: &mut [f64]) {
        self.topology.mul_vec(y, out);
        for ((o, d), yi) in out.iter_mut().zip(&self.diag).zip(y) {
            *o = d * yi - *o;
        }
    }

    /// `out = A^T v`, by column traversal of the stored rows.
    pub fn apply_transpose(&self, v: &[f64], out: &mut [f64]) {
        self.topology.mul_transpose_vec(v, out);
        for ((o, d), vi) in out.iter_mut().zip(&self.diag).zip(v) {
            *o = d * vi - *o;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = -self.topology.to_dense();
        for i in 0..self.n() {
            a[(i, i)] = self.diag[i];
        }
        a
    }

    /// Smallest gap `|A_ii| - sum_{j != i} |A_ij|`; always `>= 1`.
    pub fn dominance_margin(&self) -> f64 {
        (0..self.n())
            .map(|i| self.diag[i] - self.topology.row_sum(i))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Internal opinions `s = A(w) y` for which `y` is the equilibrium.
pub fn recover_internal(topology: &Topology, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != topology.n() {
        return Err(Error::DimensionMismatch {
            what: "expressed opinions",
            expected: topology.n(),
            actual: y.len(),
        });
    }
    let system = build_system(topology.clone(), &vec![0.0; y.len()])?;
    let mut s = vec![0.0; y.len()];
    system.apply(y, &mut s);
    Ok(s)
}

/// Assembles `A(w)` from a network and the internal opinions.
pub fn build_system(topology: Topology, s: &[f64]) -> Result<EquilibriumSystem> {
    if s.len() != topology.n() {
        return Err(Error::DimensionMismatch {
            what: "internal opinions",
            expected: topology.n(),
            actual: s.len(),
        });
    }
    if let Some(k) = s.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            location: format!("internal opinion {k}"),
        });
    }
    if let Some((i, j, w)) = topology.entries().find(|&(_, _, w)| w < 0.0) {
        return Err(Error::NegativeWeight {
            value: w,
            location: format!("slot ({i}, {j})"),
        });
    }
    let diag = (0..topology.n())
        .map(|i| 1.0 + topology.row_sum(i))
        .collect();
    Ok(EquilibriumSystem {
        topology,
        diag,
        s: s.to_vec(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Restarted GMRES.
    IterativeKrylov,
    /// Dense LU with partial pivoting.
    DenseDirect,
    /// The FJ update rule iterated to a fixed point.
    FjFixedPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSolveConfig {
    pub method: SolveMethod,
    /// Bound on `||A y - s|| / ||s||`.
    pub residual_tol: f64,
    pub max_inner_iters: usize,
    pub restart: usize,
    /// Right Jacobi preconditioning for the Krylov path.
    pub jacobi: bool,
    /// Largest `n` for which a failed Krylov solve falls back to dense LU.
    pub dense_fallback_max: usize,
}

impl Default for LinearSolveConfig {
    fn default() -> Self {
        Self {
            method: SolveMethod::IterativeKrylov,
            residual_tol: 1e-8,
            max_inner_iters: 2000,
            restart: 50,
            jacobi: false,
            dense_fallback_max: 500,
        }
    }
}

impl LinearSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "residual_tol must be positive, got {}",
                self.residual_tol
            )));
        }
        if self.method == SolveMethod::IterativeKrylov && self.restart == 0 {
            return Err(Error::InvalidConfig("restart must be positive".into()));
        }
        Ok(())
    }

    pub fn with_method(mut self, method: SolveMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self
    }
}

/// Solution of one linear solve plus diagnostics.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    /// Achieved relative residual.
    pub residual: f64,
    pub iterations: usize,
    /// Method that produced `x` (differs from the configured one after a
    /// dense fallback).
    pub method: SolveMethod,
}

struct Forward<'a>(&'a EquilibriumSystem);
struct Transposed<'a>(&'a EquilibriumSystem);

impl LinearOperator for Forward<'_> {
    fn dim(&self) -> usize {
        self.0.n()
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.0.apply(x, out);
    }
}

impl LinearOperator for Transposed<'_> {
    fn dim(&self) -> usize {
        self.0.n()
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.0.apply_transpose(x, out);
    }
}

/// Computes `y*` with `A(w) y* = s`. `warm` seeds iterative methods.
pub fn solve_equilibrium(
    system: &EquilibriumSystem,
    config: &LinearSolveConfig,
    warm: Option<&[f64]>,
) -> Result<SolveOutcome> {
    solve_linear(system, false, &system.s, config, warm)
}

/// Solves `A x = rhs` or `A^T x = rhs` with the configured method.
pub(crate) fn solve_linear(
    system: &EquilibriumSystem,
    transpose: bool,
    rhs: &[f64],
    config: &LinearSolveConfig,
    warm: Option<&[f64]>,
) -> Result<SolveOutcome> {
    config.validate()?;
    let n = system.n();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            what: "right-hand side",
            expected: n,
            actual: rhs.len(),
        });
    }
    let mut x = match warm {
        Some(w) if w.len() == n && w.iter().all(|v| v.is_finite()) => w.to_vec(),
        _ => rhs.to_vec(),
    };
    match config.method {
        SolveMethod::DenseDirect => dense(system, transpose, rhs),
        SolveMethod::FjFixedPoint => {
            let stats = fixed_point(system, transpose, rhs, &mut x, config)?;
            Ok(SolveOutcome {
                x,
                residual: stats.residual,
                iterations: stats.iterations,
                method: SolveMethod::FjFixedPoint,
            })
        }
        SolveMethod::IterativeKrylov => {
            let opts = GmresOptions {
                restart: config.restart,
                max_iters: config.max_inner_iters,
                tol: config.residual_tol,
            };
            let inv_diag: Option<Vec<f64>> = config
                .jacobi
                .then(|| system.diag.iter().map(|d| 1.0 / d).collect());
            let result = if transpose {
                linalg::gmres(&Transposed(system), inv_diag.as_deref(), rhs, &mut x, &opts)
            } else {
                linalg::gmres(&Forward(system), inv_diag.as_deref(), rhs, &mut x, &opts)
            };
            match result {
                Ok(stats) => Ok(SolveOutcome {
                    x,
                    residual: stats.residual,
                    iterations: stats.iterations,
                    method: SolveMethod::IterativeKrylov,
                }),
                Err(Error::SolverDidNotConverge { .. }) if n <= config.dense_fallback_max => {
                    let mut out = dense(system, transpose, rhs)?;
                    out.iterations = config.max_inner_iters;
                    Ok(out)
                }
                Err(e) => Err(e),
            }
        }
    }
}

fn dense(system: &EquilibriumSystem, transpose: bool, rhs: &[f64]) -> Result<SolveOutcome> {
    let a = system.to_dense();
    let a = if transpose { a.transpose() } else { a };
    let x = linalg::dense_solve(a, rhs)?;
    let residual = relative_residual(system, transpose, &x, rhs);
    Ok(SolveOutcome {
        x,
        residual,
        iterations: 1,
        method: SolveMethod::DenseDirect,
    })
}

/// Jacobi sweeps `x <- D^{-1} (rhs + W x)` (or `W^T x`). The residual of the
/// current iterate is `||D (x - x_next)||`, so it comes for free.
fn fixed_point(
    system: &EquilibriumSystem,
    transpose: bool,
    rhs: &[f64],
    x: &mut [f64],
    config: &LinearSolveConfig,
) -> Result<IterStats> {
    let n = system.n();
    let scale = linalg::norm2(rhs);
    if scale == 0.0 {
        x.fill(0.0);
        return Ok(IterStats::default());
    }
    let mut wx = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 0..=config.max_inner_iters {
        if transpose {
            system.topology.mul_transpose_vec(x, &mut wx);
        } else {
            system.topology.mul_vec(x, &mut wx);
        }
        let mut r2 = 0.0;
        for i in 0..n {
            let next = (rhs[i] + wx[i]) / system.diag[i];
            let r = system.diag[i] * (x[i] - next);
            r2 += r * r;
            wx[i] = next;
        }
        residual = r2.sqrt() / scale;
        if residual <= config.residual_tol {
            return Ok(IterStats {
                iterations: it,
                residual,
            });
        }
        x.copy_from_slice(&wx);
    }
    Err(Error::SolverDidNotConverge {
        iterations: config.max_inner_iters,
        residual,
    })
}

fn relative_residual(system: &EquilibriumSystem, transpose: bool, x: &[f64], rhs: &[f64]) -> f64 {
    let mut ax = vec![0.0; system.n()];
    if transpose {
        system.apply_transpose(x, &mut ax);
    } else {
        system.apply(x, &mut ax);
    }
    let r: f64 = ax
        .iter()
        .zip(rhs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale = linalg::norm2(rhs);
    if scale > 0.0 {
        r / scale
    } else {
        r
    }
}

/// `||A y - s||_2`.
pub fn equilibrium_residual(system: &EquilibriumSystem, y: &[f64]) -> f64 {
    let mut ay = vec![0.0; system.n()];
    system.apply(y, &mut ay);
    ay.iter()
        .zip(&system.s)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}
