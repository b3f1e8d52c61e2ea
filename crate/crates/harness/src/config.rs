//! Declarative experiment configuration, read from TOML and validated before
//! any computation starts.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use fjnet::{LinearSolveConfig, ProjectionOptions};
use serde::{Deserialize, Serialize};

/// Experiments the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Toy,
    Budget,
    NadCompare,
    Scalability,
    Ablation,
    NormStudy,
    Gradcheck,
    ProjectCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Toy => "toy",
            Experiment::Budget => "budget",
            Experiment::NadCompare => "nad-compare",
            Experiment::Scalability => "scalability",
            Experiment::Ablation => "ablation",
            Experiment::NormStudy => "norm-study",
            Experiment::Gradcheck => "gradcheck",
            Experiment::ProjectCheck => "project-check",
        }
    }
}

/// Algorithms selectable for the comparison experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Beers,
    Nad,
    NadStar,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Beers, Algorithm::Nad, Algorithm::NadStar];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Beers => "beers",
            Algorithm::Nad => "nad",
            Algorithm::NadStar => "nad-star",
        }
    }
}

/// How the opinions in a file relate to the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpinionKind {
    /// Internal opinions `s`, used as given.
    Internal,
    /// Observed opinions `y`; `s` is recovered as `A(w) y`.
    Expressed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Dataset {
    /// Directed Erdős–Rényi network with `s` in `{-1, +1}`.
    Polarized {
        n: usize,
        /// Expected out-degree; the edge density is `avg_degree / (n - 1)`.
        #[serde(default = "default_avg_degree")]
        avg_degree: f64,
        /// Fraction of nodes with `s = +1`.
        #[serde(default = "default_split")]
        split: f64,
    },
    /// Undirected two-camp network with expressed opinions in `[0, 1]`.
    Bimodal {
        n: usize,
        #[serde(default = "default_p_in")]
        p_in: f64,
        #[serde(default = "default_p_out")]
        p_out: f64,
        #[serde(default = "default_low")]
        low: (f64, f64),
        #[serde(default = "default_high")]
        high: (f64, f64),
    },
    /// Edge list plus one opinion per line.
    File {
        edges: PathBuf,
        opinions: PathBuf,
        #[serde(default)]
        directed: bool,
        #[serde(default = "default_opinion_kind")]
        opinion_kind: OpinionKind,
    },
}

/// Sparse enough that many users keep opinions near their internal ones,
/// as in the first nodes of a citation graph.
pub(crate) fn default_avg_degree() -> f64 {
    3.0
}
fn default_split() -> f64 {
    0.5
}
fn default_p_in() -> f64 {
    0.1
}
fn default_p_out() -> f64 {
    0.02
}
fn default_low() -> (f64, f64) {
    (0.1, 0.45)
}
fn default_high() -> (f64, f64) {
    (0.55, 0.9)
}
fn default_opinion_kind() -> OpinionKind {
    OpinionKind::Expressed
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    /// Budget as a fraction of the user count (`b = fraction * n`).
    pub budget_fraction: f64,
    /// Absolute budget; overrides `budget_fraction`.
    pub budget: Option<f64>,
    /// Frobenius-ball fraction.
    pub delta: f64,
    /// Frobenius penalty of NAD*.
    pub lambda: f64,
    /// Keep only the first `truncate` nodes of a file dataset.
    pub truncate: Option<usize>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            budget_fraction: 0.1,
            budget: None,
            delta: 0.2,
            lambda: 0.2,
            truncate: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    /// Constant step; when absent the automatic step (one hundredth of the
    /// problem size) is used.
    pub alpha: Option<f64>,
    pub auto_step: bool,
    pub gamma: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub warm_start: bool,
    pub strict: bool,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            alpha: None,
            auto_step: true,
            gamma: 0.95,
            epsilon: 1e-3,
            max_iters: 10_000,
            warm_start: true,
            strict: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NadSection {
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub step_scale: f64,
    pub outer_tol: f64,
    pub max_outer_iters: usize,
}

impl Default for NadSection {
    fn default() -> Self {
        let d = fjnet::NadConfig::default();
        Self {
            inner_tol: d.inner_tol,
            inner_max_iters: d.inner_max_iters,
            step_scale: d.step_scale,
            outer_tol: d.outer_tol,
            max_outer_iters: d.max_outer_iters,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalabilitySection {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub avg_degree: f64,
}

impl Default for ScalabilitySection {
    fn default() -> Self {
        Self {
            sizes: vec![1_000, 10_000, 100_000],
            repeats: 10,
            avg_degree: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSection {
    pub alphas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for AblationSection {
    fn default() -> Self {
        Self {
            alphas: vec![1.0, 10.0, 100.0],
            gammas: vec![0.0, 0.5, 0.9, 0.95],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormStudySection {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Constant step compared against the automatic one.
    pub constant_alpha: f64,
}

impl Default for NormStudySection {
    fn default() -> Self {
        Self {
            sizes: vec![500, 1000, 2000, 4000],
            seeds: (0..8).collect(),
            constant_alpha: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    pub instances: usize,
    pub max_n: usize,
    /// Finite-difference step.
    pub step: f64,
    pub tolerance: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            instances: 50,
            max_n: 20,
            step: 1e-6,
            tolerance: 1e-5,
        }
    }
}

/// One experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub dataset: Option<Dataset>,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub solver: LinearSolveConfig,
    #[serde(default)]
    pub projection: ProjectionOptions,
    #[serde(default)]
    pub nad: NadSection,
    #[serde(default)]
    pub scalability: ScalabilitySection,
    #[serde(default)]
    pub ablation: AblationSection,
    #[serde(default)]
    pub norm_study: NormStudySection,
    #[serde(default)]
    pub check: CheckSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Built-in configuration of `experiment`.
    pub fn preset(experiment: Experiment) -> Self {
        let dataset = match experiment {
            Experiment::Budget | Experiment::Ablation | Experiment::NormStudy => {
                Some(Dataset::Polarized {
                    n: 1000,
                    avg_degree: default_avg_degree(),
                    split: default_split(),
                })
            }
            Experiment::NadCompare => Some(Dataset::Bimodal {
                n: 150,
                p_in: default_p_in(),
                p_out: default_p_out(),
                low: default_low(),
                high: default_high(),
            }),
            _ => None,
        };
        let mut optimizer = OptimizerSection::default();
        if experiment == Experiment::Toy {
            optimizer.alpha = Some(1.0);
        }
        Self {
            experiment,
            seed: 0,
            output_dir: PathBuf::from("out").join(experiment.name()),
            dataset,
            problem: ProblemConfig::default(),
            optimizer,
            solver: LinearSolveConfig::default(),
            projection: ProjectionOptions::default(),
            nad: NadSection::default(),
            scalability: ScalabilitySection::default(),
            ablation: AblationSection::default(),
            norm_study: NormStudySection::default(),
            check: CheckSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads and validates a config file. Relative dataset paths are taken
    /// relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config =
            Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(Dataset::File {
            edges, opinions, ..
        }) = &mut config.dataset
        {
            let base = path.parent().unwrap_or(Path::new("."));
            for p in [edges, opinions] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        config
            .validate()
            .with_context(|| format!("validating config {}", path.display()))?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        ensure!(
            p.delta > 0.0,
            "problem.delta must be positive, got {}",
            p.delta
        );
        ensure!(
            p.lambda >= 0.0,
            "problem.lambda must be >= 0, got {}",
            p.lambda
        );
        ensure!(
            p.budget_fraction >= 0.0,
            "problem.budget_fraction must be >= 0"
        );
        if let Some(b) = p.budget {
            ensure!(b >= 0.0, "problem.budget must be >= 0, got {b}");
        }
        self.optimizer_config(1)?.validate()?;
        self.nad_config(0.0).validate()?;
        ensure!(self.projection.tol > 0.0, "projection.tol must be positive");

        match &self.dataset {
            Some(Dataset::File {
                edges, opinions, ..
            }) => {
                for f in [edges, opinions] {
                    ensure!(f.is_file(), "dataset file {} does not exist", f.display());
                }
            }
            Some(Dataset::Polarized {
                n,
                avg_degree,
                split,
            }) => {
                ensure!(*n >= 2, "dataset.n must be >= 2");
                ensure!(
                    *avg_degree > 0.0 && *avg_degree <= (*n - 1) as f64,
                    "dataset.avg_degree must lie in (0, n - 1]"
                );
                ensure!(
                    (0.0..=1.0).contains(split),
                    "dataset.split must lie in [0, 1]"
                );
            }
            Some(Dataset::Bimodal { n, p_in, p_out, .. }) => {
                ensure!(*n >= 4, "dataset.n must be >= 4");
                for (name, v) in [("p_in", p_in), ("p_out", p_out)] {
                    ensure!((0.0..=1.0).contains(v), "dataset.{name} must lie in [0, 1]");
                }
            }
            None => {}
        }
        let needs_dataset = matches!(
            self.experiment,
            Experiment::Budget | Experiment::Ablation | Experiment::NadCompare
        );
        if needs_dataset && self.dataset.is_none() {
            bail!(
                "experiment {} needs a [dataset] section",
                self.experiment.name()
            );
        }
        if self.experiment == Experiment::NadCompare {
            if let Some(Dataset::Polarized { .. }) = self.dataset {
                bail!("nad-compare needs an undirected dataset (bimodal or file)");
            }
            if let Some(Dataset::File { directed: true, .. }) = self.dataset {
                bail!("nad-compare needs an undirected dataset");
            }
        }
        if self.experiment == Experiment::Scalability {
            ensure!(
                self.scalability.repeats >= 1,
                "scalability.repeats must be >= 1"
            );
            ensure!(
                self.scalability.sizes.iter().all(|&n| n >= 2),
                "scalability.sizes must all be >= 2"
            );
            ensure!(
                self.scalability.avg_degree > 0.0,
                "scalability.avg_degree must be positive"
            );
        }
        if self.experiment == Experiment::Ablation {
            ensure!(
                self.ablation.alphas.iter().all(|&a| a > 0.0),
                "ablation.alphas must be positive"
            );
            ensure!(
                self.ablation.gammas.iter().all(|g| (0.0..1.0).contains(g)),
                "ablation.gammas must lie in [0, 1)"
            );
        }
        if self.experiment == Experiment::NormStudy {
            ensure!(
                self.norm_study.sizes.iter().all(|&n| n >= 2),
                "norm_study.sizes must all be >= 2"
            );
            ensure!(
                self.norm_study.constant_alpha > 0.0,
                "norm_study.constant_alpha must be positive"
            );
        }
        if matches!(
            self.experiment,
            Experiment::Gradcheck | Experiment::ProjectCheck
        ) {
            ensure!(self.check.max_n >= 3, "check.max_n must be >= 3");
            ensure!(self.check.step > 0.0, "check.step must be positive");
            ensure!(
                self.check.tolerance > 0.0,
                "check.tolerance must be positive"
            );
        }
        Ok(())
    }

    /// Optimizer settings for a problem whose automatic step basis is `basis`.
    pub fn optimizer_config(&self, basis: usize) -> Result<fjnet::OptimizerConfig> {
        let o = &self.optimizer;
        let step = match (o.alpha, o.auto_step) {
            (Some(a), _) => fjnet::StepSize::Constant(a),
            (None, true) => fjnet::StepSize::Auto(fjnet::StepBasis::Count(basis.max(1))),
            (None, false) => bail!("optimizer.alpha is required when auto_step = false"),
        };
        Ok(fjnet::OptimizerConfig {
            step,
            gamma: o.gamma,
            epsilon: o.epsilon,
            max_iters: o.max_iters,
            solver: self.solver,
            warm_start: o.warm_start,
            strict: o.strict,
        })
    }

    pub fn nad_config(&self, lambda: f64) -> fjnet::NadConfig {
        let n = &self.nad;
        fjnet::NadConfig {
            delta: self.problem.delta,
            lambda,
            degree_preserving: true,
            inner_tol: n.inner_tol,
            inner_max_iters: n.inner_max_iters,
            step_scale: n.step_scale,
            outer_tol: n.outer_tol,
            max_outer_iters: n.max_outer_iters,
            solver: self.solver,
            projection: self.projection,
        }
    }
}
