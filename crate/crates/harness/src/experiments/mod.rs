//! Experiment drivers. Every driver writes its tables and a JSON summary into
//! the configured output directory and returns the summary.

pub mod budget;
pub mod checks;
pub mod compare;
pub mod toy;

use anyhow::Result;
use fjnet::{build_system, solve_equilibrium, DecisionVector, LinearSolveConfig, Termination};
use serde::Serialize;

/// Overall verdict of a run, used for the process exit code.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub ok: bool,
    pub message: String,
}

impl Outcome {
    pub fn success(message: impl Into<String>) -> Self {
        Self {
            ok: true,
            message: message.into(),
        }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Self {
            ok: false,
            message: message.into(),
        }
    }
}

/// Equilibrium opinions of `decision` for internal opinions `s`.
pub fn equilibrium(
    decision: &DecisionVector,
    s: &[f64],
    solver: &LinearSolveConfig,
) -> Result<Vec<f64>> {
    let system = build_system(decision.assemble()?, s)?;
    Ok(solve_equilibrium(&system, solver, None)?.x)
}

pub fn termination_label(t: &Termination) -> String {
    match t {
        Termination::Converged => "converged".into(),
        Termination::MaxIterations => "max-iterations".into(),
        Termination::Failed(msg) => format!("failed: {msg}"),
    }
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
