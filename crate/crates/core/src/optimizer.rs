//! Projected gradient descent with heavy-ball momentum on `phi(w, y*(w))`.
//!
//! Each iteration solves the equilibrium at the current (feasible) weights,
//! evaluates `phi`, tests the relative decrease, and otherwise takes
//! `m <- gamma m + grad`, `w <- Proj(w - alpha m)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{build_system, solve_equilibrium, LinearSolveConfig};
use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::graph::DecisionVector;
use crate::hypergradient::{j1f_vjp, solve_adjoint};
use crate::objectives::{check_gradients, EvalContext, Objective, REGISTRATION_TOLERANCE};
use crate::report::{PhaseTimings, SolveReport, Termination};

/// Whether a value of [`zeta`] is relative or the absolute fallback.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZetaMode {
    Relative,
    Absolute,
}

/// `|phi_prev - phi_curr| / |phi_prev|`, or the absolute difference when
/// `phi_prev = 0`.
pub fn zeta(phi_prev: f64, phi_curr: f64) -> (f64, ZetaMode) {
    let diff = (phi_prev - phi_curr).abs();
    if phi_prev == 0.0 {
        (diff, ZetaMode::Absolute)
    } else {
        (diff / phi_prev.abs(), ZetaMode::Relative)
    }
}

/// Size the automatic step is proportional to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepBasis {
    /// The number of decision variables `m`.
    Variables,
    /// An explicit count, e.g. the users of a per-user problem.
    Count(usize),
}

/// `alpha = basis / 100`.
pub fn auto_step_size(basis: usize) -> f64 {
    basis as f64 / 100.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSize {
    Constant(f64),
    /// `alpha_0 / (k + 1)^power`.
    Diminishing {
        alpha0: f64,
        power: f64,
    },
    Auto(StepBasis),
}

impl StepSize {
    fn at(&self, k: usize, m: usize) -> f64 {
        match *self {
            StepSize::Constant(a) => a,
            StepSize::Diminishing { alpha0, power } => alpha0 / ((k + 1) as f64).powf(power),
            StepSize::Auto(StepBasis::Variables) => auto_step_size(m),
            StepSize::Auto(StepBasis::Count(c)) => auto_step_size(c),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub step: StepSize,
    /// Momentum `gamma` in `[0, 1)`.
    pub gamma: f64,
    /// Relative-decrease tolerance `epsilon`.
    pub epsilon: f64,
    pub max_iters: usize,
    pub solver: LinearSolveConfig,
    /// Seed forward and adjoint solves with the previous iterate's solutions.
    pub warm_start: bool,
    /// Refuse to run unless a sampled finite-difference check of the
    /// objective's partial gradients passes at the start point.
    pub strict: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step: StepSize::Auto(StepBasis::Variables),
            gamma: 0.95,
            epsilon: 1e-3,
            max_iters: 10_000,
            solver: LinearSolveConfig::default(),
            warm_start: true,
            strict: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        match self.step {
            StepSize::Constant(a) | StepSize::Diminishing { alpha0: a, .. } if !(a > 0.0) => {
                return bad(format!("step size must be positive, got {a}"));
            }
            StepSize::Diminishing { power, .. } if !(power >= 0.0) => {
                return bad(format!("step decay power must be >= 0, got {power}"));
            }
            StepSize::Auto(StepBasis::Count(0)) => {
                return bad("automatic step basis must be positive".into());
            }
            _ => {}
        }
        self.solver.validate()
    }
}

/// Runs the optimizer from `decision0` over `set`.
///
/// The start point is projected first. A failed linear solve or projection
/// ends the run early with [`Termination::Failed`]; the traces then stop at
/// the last completed iterate. Invalid input is an error.
pub fn optimize(
    decision0: &DecisionVector,
    s: &[f64],
    objective: &dyn Objective,
    set: &FeasibleSet,
    config: &OptimizerConfig,
) -> Result<SolveReport> {
    config.validate()?;
    let m = decision0.len();
    if set.dim() != m {
        return Err(Error::DimensionMismatch {
            what: "feasible set",
            expected: m,
            actual: set.dim(),
        });
    }
    if s.len() != decision0.layout().n() {
        return Err(Error::DimensionMismatch {
            what: "internal opinions",
            expected: decision0.layout().n(),
            actual: s.len(),
        });
    }
    let start = Instant::now();
    let mut report = SolveReport::new("beers", objective.name());
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let w0 = set.ensure_nonempty(decision0.values())?;
    PhaseTimings::add(&mut timings.projection, t.elapsed());
    report.initial_w = decision0.values().to_vec();
    report.initial_projection_shift = crate::linalg::norm2(
        &w0.iter()
            .zip(decision0.values())
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );

    let mut decision = decision0.with_values(w0)?;
    let mut topology = decision.assemble()?;
    let mut momentum = vec![0.0; m];
    let mut warm_y: Option<Vec<f64>> = None;
    let mut warm_v: Option<Vec<f64>> = None;
    let mut y: Vec<f64> = Vec::new();
    let mut evaluated_w: Vec<f64> = decision.values().to_vec();
    let mut evaluated_y: Vec<f64> = s.to_vec();
    let mut k = 0usize;

    let outcome: Result<Termination> = (|| loop {
        // forward solve and objective at the feasible iterate w_k
        report.max_violation = report
            .max_violation
            .max(set.check_membership(decision.values()).worst());
        let t = Instant::now();
        let system = build_system(topology.clone(), s)?;
        let forward = solve_equilibrium(&system, &config.solver, warm_y.as_deref())?;
        PhaseTimings::add(&mut timings.forward_solve, t.elapsed());
        report.residuals.forward_residuals.push(forward.residual);
        report.residuals.forward_iterations.push(forward.iterations);
        y = forward.x;

        let t = Instant::now();
        let ctx = EvalContext {
            decision: &decision,
            topology: &topology,
            y: &y,
        };
        if k == 0 && config.strict {
            let check = check_gradients(objective, &decision, &y, 1e-6, Some((8, 0)))?;
            if check.worst() > REGISTRATION_TOLERANCE {
                return Err(Error::GradientCheck {
                    name: objective.name(),
                    error: check.worst(),
                });
            }
        }
        let phi = objective.value(&ctx);
        if !phi.is_finite() {
            return Err(Error::NonFinite {
                location: format!("objective at iteration {k}"),
            });
        }
        report.phi.push(phi);
        evaluated_w.copy_from_slice(decision.values());
        evaluated_y.clone_from(&y);
        if k >= 1 {
            let (z, mode) = zeta(report.phi[k - 1], phi);
            report.zeta.push(z);
            if mode == ZetaMode::Absolute {
                report.absolute_zeta_at.push(k);
            }
            if z <= config.epsilon {
                PhaseTimings::add(&mut timings.objective, t.elapsed());
                return Ok(Termination::Converged);
            }
        }
        if k == config.max_iters {
            PhaseTimings::add(&mut timings.objective, t.elapsed());
            return Ok(Termination::MaxIterations);
        }
        let mut grad = vec![0.0; m];
        objective.add_grad_w(&ctx, 1.0, &mut grad);
        let grad_y = objective.grad_y(&ctx);
        PhaseTimings::add(&mut timings.objective, t.elapsed());

        let t = Instant::now();
        let adjoint = solve_adjoint(&system, &grad_y, &config.solver, warm_v.as_deref())?;
        PhaseTimings::add(&mut timings.adjoint_solve, t.elapsed());
        report.residuals.adjoint_residuals.push(adjoint.residual);
        report.residuals.adjoint_iterations.push(adjoint.iterations);

        let t = Instant::now();
        let vjp = j1f_vjp(decision.layout(), &y, &adjoint.x)?;
        for (g, p) in grad.iter_mut().zip(&vjp) {
            *g -= p;
        }
        PhaseTimings::add(&mut timings.vjp, t.elapsed());

        let alpha = config.step.at(k, m);
        for (mk, g) in momentum.iter_mut().zip(&grad) {
            *mk = config.gamma * *mk + g;
        }
        let trial: Vec<f64> = decision
            .values()
            .iter()
            .zip(&momentum)
            .map(|(w, mk)| w - alpha * mk)
            .collect();
        if let Some(i) = trial.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("weights after step {k}, entry {i}"),
            });
        }
        let t = Instant::now();
        let next = set.project(&trial)?;
        PhaseTimings::add(&mut timings.projection, t.elapsed());
        decision.set_values(&next);
        decision.assemble_into(&mut topology)?;
        if config.warm_start {
            warm_y = Some(y.clone());
            warm_v = Some(adjoint.x);
        }
        k += 1;
    })();

    report.termination = match outcome {
        Ok(t) => t,
        Err(e @ (Error::InvalidConfig(_) | Error::GradientCheck { .. })) => return Err(e),
        Err(e) => Termination::Failed(e.to_string()),
    };
    // after a failure the weights may have moved past the last evaluated
    // iterate; report the one whose phi is recorded
    report.iterations = report.phi.len().saturating_sub(1);
    report.zeta.truncate(report.iterations);
    report.final_w = evaluated_w;
    report.final_y = evaluated_y;
    timings.total = start.elapsed().as_secs_f64();
    report.timings = timings;
    Ok(report)
}
