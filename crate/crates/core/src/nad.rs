//! Network administrator dynamics: alternate between the equilibrium at the
//! current weights and the weights minimizing disagreement for those frozen
//! opinions, optionally with a Frobenius penalty (NAD*).
//!
//! With `y` frozen the inner problem is
//! `min_w  sum_k c_k w_k + lambda sum_k q_k w_k^2` over the feasible set,
//! where `c_k = sum over slots of k of (y_i - y_j)^2 / 2` and `q_k` is the slot
//! count of variable `k`. It is solved by projected gradient.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{build_system, solve_equilibrium, LinearSolveConfig};
use crate::error::{Error, Result};
use crate::feasible::{FeasibleSet, Primitive, ProjectionOptions};
use crate::graph::{DecisionLayout, DecisionVector};
use crate::linalg::norm2;
use crate::objectives::{disagreement, polarization_variance};
use crate::report::{PhaseTimings, SolveReport, Termination};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct NadConfig {
    /// Ball radius as a fraction of `||W0||_F`.
    pub delta: f64,
    /// Frobenius penalty; 0 is plain NAD.
    pub lambda: f64,
    /// Keep every row sum at its initial value.
    pub degree_preserving: bool,
    /// Inner stop: `||w_next - w|| <= inner_tol * max(1, ||w||)`.
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    /// For `lambda = 0` the inner step is `step_scale * radius / ||c||`.
    pub step_scale: f64,
    /// Outer stop: `||w_next - w|| <= outer_tol * max(1, ||w||)`.
    pub outer_tol: f64,
    pub max_outer_iters: usize,
    pub solver: LinearSolveConfig,
    pub projection: ProjectionOptions,
}

impl Default for NadConfig {
    fn default() -> Self {
        Self {
            delta: 0.2,
            lambda: 0.0,
            degree_preserving: true,
            inner_tol: 1e-10,
            inner_max_iters: 20_000,
            step_scale: 10.0,
            outer_tol: 1e-5,
            max_outer_iters: 1000,
            solver: LinearSolveConfig::default(),
            projection: ProjectionOptions::default(),
        }
    }
}

impl NadConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.delta > 0.0) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.lambda >= 0.0) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.inner_tol > 0.0 && self.outer_tol > 0.0) {
            return bad("NAD tolerances must be positive".into());
        }
        if !(self.step_scale > 0.0) {
            return bad(format!(
                "step_scale must be positive, got {}",
                self.step_scale
            ));
        }
        self.solver.validate()
    }

    pub fn algorithm_name(&self) -> &'static str {
        if self.lambda > 0.0 {
            "nad-star"
        } else {
            "nad"
        }
    }
}

/// Degree equality (if enabled), the Frobenius ball around `reference` and
/// non-negativity.
pub fn nad_feasible_set(reference: &DecisionVector, config: &NadConfig) -> Result<FeasibleSet> {
    let mut primitives = Vec::new();
    if config.degree_preserving {
        primitives.push(Primitive::degree_preserving(reference));
    }
    primitives.push(Primitive::frobenius_fraction(reference, config.delta)?);
    primitives.push(Primitive::NonNegative);
    FeasibleSet::with_initial(
        reference.len(),
        primitives,
        config.projection,
        reference.values(),
    )
}

/// Linear coefficients `c_k` of the disagreement for frozen `y`.
pub fn disagreement_coefficients(layout: &DecisionLayout, y: &[f64]) -> Vec<f64> {
    (0..layout.len())
        .map(|k| {
            layout
                .slots(k)
                .iter()
                .map(|&(i, j)| 0.5 * (y[i] - y[j]) * (y[i] - y[j]))
                .sum()
        })
        .collect()
}

/// `sum c_k w_k + lambda sum q_k w_k^2`, omitting frozen-slot constants.
pub fn inner_objective(layout: &DecisionLayout, c: &[f64], w: &[f64], lambda: f64) -> f64 {
    c.iter()
        .zip(w)
        .enumerate()
        .map(|(k, (ck, wk))| ck * wk + lambda * layout.multiplicity(k) as f64 * wk * wk)
        .sum()
}

#[derive(Clone, Debug)]
pub struct InnerSolution {
    pub w: Vec<f64>,
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
}

/// Minimizes the frozen-opinion problem over `set`, starting from `w`.
pub fn nad_inner_step(
    layout: &DecisionLayout,
    y_fixed: &[f64],
    w: &[f64],
    set: &FeasibleSet,
    config: &NadConfig,
) -> Result<InnerSolution> {
    let m = layout.len();
    if w.len() != m || set.dim() != m {
        return Err(Error::DimensionMismatch {
            what: "NAD weights",
            expected: m,
            actual: w.len(),
        });
    }
    if y_fixed.len() != layout.n() {
        return Err(Error::DimensionMismatch {
            what: "frozen opinions",
            expected: layout.n(),
            actual: y_fixed.len(),
        });
    }
    let c = disagreement_coefficients(layout, y_fixed);
    let q = layout.multiplicities();
    let step = if config.lambda > 0.0 {
        let max_q = q.iter().copied().fold(1.0, f64::max);
        1.0 / (2.0 * config.lambda * max_q)
    } else {
        let cn = norm2(&c);
        if cn == 0.0 {
            let w = set.project(w)?;
            let objective = inner_objective(layout, &c, &w, 0.0);
            return Ok(InnerSolution {
                w,
                iterations: 0,
                objective,
                converged: true,
            });
        }
        config.step_scale * ball_radius(set).unwrap_or_else(|| norm2(w).max(1.0)) / cn
    };

    let mut x = set.project(w)?;
    let mut trial = vec![0.0; m];
    for it in 1..=config.inner_max_iters {
        for k in 0..m {
            let g = c[k] + 2.0 * config.lambda * q[k] * x[k];
            trial[k] = x[k] - step * g;
        }
        let next = set.project(&trial)?;
        let moved = norm2(&next.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
        x = next;
        if moved <= config.inner_tol * norm2(&x).max(1.0) {
            let objective = inner_objective(layout, &c, &x, config.lambda);
            return Ok(InnerSolution {
                w: x,
                iterations: it,
                objective,
                converged: true,
            });
        }
    }
    let objective = inner_objective(layout, &c, &x, config.lambda);
    Ok(InnerSolution {
        w: x,
        iterations: config.inner_max_iters,
        objective,
        converged: false,
    })
}

fn ball_radius(set: &FeasibleSet) -> Option<f64> {
    set.primitives().iter().find_map(|p| match p {
        Primitive::FrobeniusBall { radius, .. } if *radius > 0.0 => Some(*radius),
        _ => None,
    })
}

/// Alternates equilibrium solves and inner steps from `decision0`.
///
/// The `phi` trace holds the disagreement at equilibrium of each iterate and
/// the `zeta` trace the relative weight change of each update. Metrics carry
/// disagreement `D` and variance polarization `P` before and after.
pub fn nad_run(
    decision0: &DecisionVector,
    s: &[f64],
    set: &FeasibleSet,
    config: &NadConfig,
) -> Result<SolveReport> {
    config.validate()?;
    let layout = decision0.layout().clone();
    let start = Instant::now();
    let mut report = SolveReport::new(config.algorithm_name(), "disagreement");
    let mut timings = PhaseTimings::default();
    report.initial_w = decision0.values().to_vec();

    let t = Instant::now();
    let w0 = set.ensure_nonempty(decision0.values())?;
    PhaseTimings::add(&mut timings.projection, t.elapsed());
    report.initial_projection_shift = norm2(
        &w0.iter()
            .zip(decision0.values())
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );
    let mut decision = decision0.with_values(w0)?;

    let equilibrium = |decision: &DecisionVector,
                       warm: Option<&[f64]>,
                       report: &mut SolveReport,
                       timings: &mut PhaseTimings|
     -> Result<(Vec<f64>, f64)> {
        let t = Instant::now();
        let topology = decision.assemble()?;
        let system = build_system(topology, s)?;
        let out = solve_equilibrium(&system, &config.solver, warm)?;
        PhaseTimings::add(&mut timings.forward_solve, t.elapsed());
        report.residuals.forward_residuals.push(out.residual);
        report.residuals.forward_iterations.push(out.iterations);
        let d = disagreement(system.topology(), &out.x);
        Ok((out.x, d))
    };

    let (mut y, d0) = equilibrium(&decision, None, &mut report, &mut timings)?;
    let p0 = polarization_variance(&y);
    report.phi.push(d0);
    let mut inner_iters = 0usize;

    let outcome: Result<Termination> = (|| {
        for _ in 0..config.max_outer_iters {
            let t = Instant::now();
            let inner = nad_inner_step(&layout, &y, decision.values(), set, config)?;
            PhaseTimings::add(&mut timings.projection, t.elapsed());
            inner_iters += inner.iterations;
            let change = norm2(
                &inner
                    .w
                    .iter()
                    .zip(decision.values())
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            ) / norm2(decision.values()).max(1.0);
            report.max_violation = report
                .max_violation
                .max(set.check_membership(&inner.w).worst());
            let candidate = decision.with_values(inner.w)?;
            let (y_next, d) = equilibrium(&candidate, Some(&y), &mut report, &mut timings)?;
            decision = candidate;
            y = y_next;
            report.phi.push(d);
            report.zeta.push(change);
            if change <= config.outer_tol {
                return Ok(Termination::Converged);
            }
        }
        Ok(Termination::MaxIterations)
    })();
    report.termination = match outcome {
        Ok(t) => t,
        Err(e) => Termination::Failed(e.to_string()),
    };
    report.iterations = report.phi.len() - 1;
    report.record_change("D", d0, *report.phi.last().expect("initial entry"));
    report.record_change("P", p0, polarization_variance(&y));
    report
        .metrics
        .insert("inner_iterations".into(), inner_iters as f64);
    report.final_w = decision.values().to_vec();
    report.final_y = y;
    timings.total = start.elapsed().as_secs_f64();
    report.timings = timings;
    Ok(report)
}
