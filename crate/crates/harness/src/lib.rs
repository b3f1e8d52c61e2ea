//! Experiment runner for the `fjnet` crate: configuration, dataset loading,
//! experiment drivers and their CSV/JSON outputs.

pub mod config;
pub mod data;
pub mod experiments;
pub mod output;

use anyhow::Result;
use serde::Serialize;

pub use config::{Algorithm, Dataset, Experiment, ExperimentConfig, OpinionKind};
pub use experiments::Outcome;

use experiments::budget::{AblationSummary, BudgetSummary, NormStudySummary, ScalabilitySummary};
use experiments::checks::{GradcheckSummary, ProjectCheckSummary};
use experiments::compare::CompareSummary;
use experiments::toy::ToySummary;

/// Summary of any experiment run.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Summary {
    Toy(ToySummary),
    Budget(BudgetSummary),
    NadCompare(CompareSummary),
    Scalability(ScalabilitySummary),
    Ablation(AblationSummary),
    NormStudy(NormStudySummary),
    Gradcheck(GradcheckSummary),
    ProjectCheck(ProjectCheckSummary),
}

impl Summary {
    pub fn outcome(&self) -> &Outcome {
        match self {
            Summary::Toy(s) => &s.outcome,
            Summary::Budget(s) => &s.outcome,
            Summary::NadCompare(s) => &s.outcome,
            Summary::Scalability(s) => &s.outcome,
            Summary::Ablation(s) => &s.outcome,
            Summary::NormStudy(s) => &s.outcome,
            Summary::Gradcheck(s) => &s.outcome,
            Summary::ProjectCheck(s) => &s.outcome,
        }
    }
}

/// Validates `config` and runs its experiment. `algorithms` applies to the
/// toy and comparison experiments.
pub fn run(config: &ExperimentConfig, algorithms: &[Algorithm]) -> Result<Summary> {
    config.validate()?;
    Ok(match config.experiment {
        Experiment::Toy => Summary::Toy(experiments::toy::run_toy(config, algorithms)?),
        Experiment::Budget => Summary::Budget(experiments::budget::run_budget(config)?),
        Experiment::NadCompare => {
            Summary::NadCompare(experiments::compare::run_nad_compare(config, algorithms)?)
        }
        Experiment::Scalability => {
            Summary::Scalability(experiments::budget::run_scalability(config)?)
        }
        Experiment::Ablation => Summary::Ablation(experiments::budget::run_ablation(config)?),
        Experiment::NormStudy => Summary::NormStudy(experiments::budget::run_norm_study(config)?),
        Experiment::Gradcheck => Summary::Gradcheck(experiments::checks::run_gradcheck(config)?),
        Experiment::ProjectCheck => {
            Summary::ProjectCheck(experiments::checks::run_project_check(config)?)
        }
    })
}
