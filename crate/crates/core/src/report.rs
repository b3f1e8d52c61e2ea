use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Accumulated wall-clock seconds per phase of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub forward_solve: f64,
    pub adjoint_solve: f64,
    pub vjp: f64,
    pub objective: f64,
    pub projection: f64,
    pub total: f64,
}

impl PhaseTimings {
    /// Share of the total spent in the forward and adjoint linear solves.
    pub fn solve_fraction(&self) -> f64 {
        if self.total > 0.0 {
            (self.forward_solve + self.adjoint_solve) / self.total
        } else {
            0.0
        }
    }

    pub(crate) fn add(slot: &mut f64, d: Duration) {
        *slot += d.as_secs_f64();
    }
}

/// Residuals and iteration counts of every linear solve in a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub forward_residuals: Vec<f64>,
    pub forward_iterations: Vec<usize>,
    pub adjoint_residuals: Vec<f64>,
    pub adjoint_iterations: Vec<usize>,
}

impl ResidualStats {
    pub fn max_forward(&self) -> f64 {
        self.forward_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_adjoint(&self) -> f64 {
        self.adjoint_residuals.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "message")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// A linear solve or projection failed; the traces stop at the last
    /// completed iterate.
    Failed(String),
}

/// Everything a run produced. Written once, at the end of the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub algorithm: String,
    pub objective: String,
    /// Number of weight updates performed.
    pub iterations: usize,
    pub termination: Termination,
    /// `phi` at every iterate, `iterations + 1` entries.
    pub phi: Vec<f64>,
    /// Termination measure after every update, `iterations` entries.
    pub zeta: Vec<f64>,
    /// Updates `k` at which `phi_{k-1} = 0` forced the absolute criterion.
    pub absolute_zeta_at: Vec<usize>,
    pub initial_w: Vec<f64>,
    pub final_w: Vec<f64>,
    pub final_y: Vec<f64>,
    /// Distance the supplied initial point moved when projected.
    pub initial_projection_shift: f64,
    /// Largest constraint violation seen over all iterates.
    pub max_violation: f64,
    pub residuals: ResidualStats,
    pub timings: PhaseTimings,
    /// Named scalar metrics, such as before/after polarization.
    pub metrics: BTreeMap<String, f64>,
}

impl SolveReport {
    pub fn new(algorithm: impl Into<String>, objective: impl Into<String>) -> Self {
        Self {
            algorithm: algorithm.into(),
            objective: objective.into(),
            iterations: 0,
            termination: Termination::MaxIterations,
            phi: Vec::new(),
            zeta: Vec::new(),
            absolute_zeta_at: Vec::new(),
            initial_w: Vec::new(),
            final_w: Vec::new(),
            final_y: Vec::new(),
            initial_projection_shift: 0.0,
            max_violation: 0.0,
            residuals: ResidualStats::default(),
            timings: PhaseTimings::default(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn failed(&self) -> bool {
        matches!(self.termination, Termination::Failed(_))
    }

    pub fn initial_phi(&self) -> Option<f64> {
        self.phi.first().copied()
    }

    pub fn final_phi(&self) -> Option<f64> {
        self.phi.last().copied()
    }

    /// Stores `before`, `after` and their percentage change under `name`.
    pub fn record_change(&mut self, name: &str, before: f64, after: f64) {
        self.metrics.insert(format!("{name}_before"), before);
        self.metrics.insert(format!("{name}_after"), after);
        self.metrics
            .insert(format!("{name}_change_pct"), percent_change(before, after));
    }
}

/// `(after - before) / before * 100`; NaN when `before = 0`.
pub fn percent_change(before: f64, after: f64) -> f64 {
    if before == 0.0 {
        f64::NAN
    } else {
        (after - before) / before * 100.0
    }
}
