//! Hypergradient of `phi(w, y*(w))` through the equilibrium constraint.
//!
//! With `F(w, y) = A(w) y - s`, implicit differentiation gives
//! `grad = nabla_1 phi - J_1F^T v` where `A(w)^T v = nabla_2 phi`. Row `i` of
//! `J_1F` holds `y_i - y_j` in the column of slot `(i, j)` and nothing else, so
//! the vector-Jacobian product costs one pass over the decision slots.

use crate::equilibrium::{
    build_system, solve_equilibrium, solve_linear, EquilibriumSystem, LinearSolveConfig,
    SolveOutcome,
};
use crate::error::{Error, Result};
use crate::graph::{DecisionLayout, DecisionVector};
use crate::objectives::{EvalContext, Objective};

/// Solves `A(w)^T v = grad_y`.
pub fn solve_adjoint(
    system: &EquilibriumSystem,
    grad_y: &[f64],
    config: &LinearSolveConfig,
    warm: Option<&[f64]>,
) -> Result<SolveOutcome> {
    if let Some(k) = grad_y.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            location: format!("objective gradient entry {k}"),
        });
    }
    solve_linear(system, true, grad_y, config, warm)
}

/// `J_1F^T v`: entry `k` is `sum over slots (i, j) of k` of `v_i (y_i - y_j)`.
pub fn j1f_vjp(layout: &DecisionLayout, y: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let n = layout.n();
    for (what, len) in [("opinions", y.len()), ("adjoint", v.len())] {
        if len != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                actual: len,
            });
        }
    }
    Ok((0..layout.len())
        .map(|k| {
            layout
                .slots(k)
                .iter()
                .map(|&(i, j)| v[i] * (y[i] - y[j]))
                .sum()
        })
        .collect())
}

/// Gradient together with the states it was computed from.
#[derive(Clone, Debug)]
pub struct HypergradientResult {
    pub grad: Vec<f64>,
    pub phi: f64,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub forward_residual: f64,
    pub adjoint_residual: f64,
    pub forward_iterations: usize,
    pub adjoint_iterations: usize,
}

/// Adjoint half of the computation when `y*` is already known.
///
/// Returns `(gradient, adjoint outcome)`.
pub fn hypergradient_at(
    system: &EquilibriumSystem,
    ctx: &EvalContext<'_>,
    objective: &dyn Objective,
    config: &LinearSolveConfig,
    warm_adjoint: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveOutcome)> {
    let grad_y = objective.grad_y(ctx);
    let adjoint = solve_adjoint(system, &grad_y, config, warm_adjoint)?;
    let mut grad = j1f_vjp(ctx.decision.layout(), ctx.y, &adjoint.x)?;
    for g in &mut grad {
        *g = -*g;
    }
    objective.add_grad_w(ctx, 1.0, &mut grad);
    Ok((grad, adjoint))
}

/// Full hypergradient: forward solve, adjoint solve, vector-Jacobian product.
pub fn hypergradient(
    decision: &DecisionVector,
    s: &[f64],
    objective: &dyn Objective,
    config: &LinearSolveConfig,
) -> Result<HypergradientResult> {
    let topology = decision.assemble()?;
    let system = build_system(topology, s)?;
    let forward = solve_equilibrium(&system, config, None)?;
    let ctx = EvalContext {
        decision,
        topology: system.topology(),
        y: &forward.x,
    };
    let phi = objective.value(&ctx);
    let (grad, adjoint) = hypergradient_at(&system, &ctx, objective, config, None)?;
    Ok(HypergradientResult {
        grad,
        phi,
        y: forward.x,
        v: adjoint.x,
        forward_residual: forward.residual,
        adjoint_residual: adjoint.residual,
        forward_iterations: forward.iterations,
        adjoint_iterations: adjoint.iterations,
    })
}

/// `phi(w, y*(w))`, solving the equilibrium from scratch.
pub fn value_at(
    decision: &DecisionVector,
    s: &[f64],
    objective: &dyn Objective,
    config: &LinearSolveConfig,
) -> Result<f64> {
    let system = build_system(decision.assemble()?, s)?;
    let y = solve_equilibrium(&system, config, None)?.x;
    Ok(objective.value(&EvalContext {
        decision,
        topology: system.topology(),
        y: &y,
    }))
}

/// Central differences of `phi(w, y*(w))` on the listed coordinates.
///
/// Coordinates closer to zero than `h` use a one-sided second-order stencil
/// so the perturbed network stays non-negative.
pub fn finite_difference_hypergradient(
    decision: &DecisionVector,
    s: &[f64],
    objective: &dyn Objective,
    config: &LinearSolveConfig,
    h: f64,
    coords: &[usize],
) -> Result<Vec<f64>> {
    let mut probe = decision.clone();
    let mut values = decision.values().to_vec();
    let mut eval = |values: &[f64]| -> Result<f64> {
        probe.set_values(values);
        value_at(&probe, s, objective, config)
    };
    coords
        .iter()
        .map(|&k| {
            let w0 = values[k];
            let fd = if w0 >= h {
                values[k] = w0 + h;
                let up = eval(&values)?;
                values[k] = w0 - h;
                let down = eval(&values)?;
                (up - down) / (2.0 * h)
            } else {
                values[k] = w0 + 2.0 * h;
                let up2 = eval(&values)?;
                values[k] = w0 + h;
                let up = eval(&values)?;
                values[k] = w0;
                let base = eval(&values)?;
                (-up2 + 4.0 * up - 3.0 * base) / (2.0 * h)
            };
            values[k] = w0;
            Ok(fd)
        })
        .collect()
}
