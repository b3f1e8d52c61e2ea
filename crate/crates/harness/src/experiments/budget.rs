//! The budget problem: a neutral node `zeta` with `s = 0` is appended, and
//! the weights `w_{i,zeta}` from every user to it are chosen to minimize the
//! users' mean-square polarization subject to `w >= 0`, `sum w <= b`.
//! Also the studies built on it: step-size ablation, scalability and the
//! initial hypergradient norm.

use std::time::Instant;

use anyhow::Result;
use fjnet::hypergradient::hypergradient;
use fjnet::linalg::norm2;
use fjnet::objectives::PolarizationMeanSquare;
use fjnet::{
    optimize, DecisionLayout, DecisionVector, FeasibleSet, OptimizerConfig, SolveReport, StepBasis,
    StepSize,
};
use serde::Serialize;

use super::{mean_std, termination_label, Outcome};
use crate::config::{Dataset, ExperimentConfig};
use crate::data::{self, Network};
use crate::output::OutputDir;

/// A budget instance ready to optimize.
pub struct BudgetProblem {
    pub users: usize,
    /// Stored entries of the user network.
    pub edges: usize,
    pub budget: f64,
    pub decision: DecisionVector,
    pub s: Vec<f64>,
    pub objective: PolarizationMeanSquare,
    pub set: FeasibleSet,
    pub warning: Option<String>,
}

impl BudgetProblem {
    pub fn new(net: &Network, budget: f64) -> Result<Self> {
        let users = net.n();
        let (mut s, warning) = net.internal()?;
        s.push(0.0);
        let base = net.topology.with_extra_nodes(1);
        let layout = DecisionLayout::column(&base, users)?;
        let decision = DecisionVector::from_topology(layout, &base)?;
        let m = decision.len();
        let set = FeasibleSet::budget(m, (0..m).collect(), budget)?;
        Ok(Self {
            users,
            edges: net.topology.nnz(),
            budget,
            decision,
            s,
            objective: PolarizationMeanSquare::over((0..users).collect()),
            set,
            warning,
        })
    }

    /// Builds the instance described by `config` (dataset, budget, seed).
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        let dataset = config
            .dataset
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("budget problems need a dataset"))?;
        let net = data::load(dataset, config.problem.truncate, config.seed)?;
        let budget = config
            .problem
            .budget
            .unwrap_or(config.problem.budget_fraction * net.n() as f64);
        Self::new(&net, budget)
    }

    pub fn optimize(&self, config: &OptimizerConfig) -> Result<SolveReport> {
        Ok(optimize(
            &self.decision,
            &self.s,
            &self.objective,
            &self.set,
            config,
        )?)
    }

    /// Optimizer settings of `config` with the automatic step based on the
    /// user count.
    pub fn optimizer_config(&self, config: &ExperimentConfig) -> Result<OptimizerConfig> {
        config.optimizer_config(self.users)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightRow {
    pub user: usize,
    pub s: f64,
    pub y_before: f64,
    pub y_after: f64,
    pub w: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetSummary {
    pub seed: u64,
    pub users: usize,
    pub edges: usize,
    pub budget: f64,
    pub alpha: f64,
    pub initial_polarization: f64,
    pub final_polarization: f64,
    pub reduction_pct: f64,
    pub budget_used: f64,
    pub budget_slack: f64,
    pub min_weight: f64,
    pub iterations: usize,
    pub termination: String,
    pub max_violation: f64,
    pub runtime_s: f64,
    pub solve_fraction: f64,
    pub warnings: Vec<String>,
    pub outcome: Outcome,
}

fn step_value(step: StepSize, m: usize) -> f64 {
    match step {
        StepSize::Constant(a) => a,
        StepSize::Diminishing { alpha0, .. } => alpha0,
        StepSize::Auto(StepBasis::Variables) => fjnet::auto_step_size(m),
        StepSize::Auto(StepBasis::Count(c)) => fjnet::auto_step_size(c),
    }
}

pub fn run_budget(config: &ExperimentConfig) -> Result<BudgetSummary> {
    let out = OutputDir::create(&config.output_dir)?;
    let problem = BudgetProblem::from_config(config)?;
    let opt = problem.optimizer_config(config)?;
    let start = Instant::now();
    let report = problem.optimize(&opt)?;
    let runtime = start.elapsed().as_secs_f64();

    let initial = report.initial_phi().unwrap_or(f64::NAN);
    let last = report.final_phi().unwrap_or(f64::NAN);
    let used: f64 = report.final_w.iter().sum();
    let y_before = super::equilibrium(&problem.decision, &problem.s, &config.solver)?;
    let rows: Vec<WeightRow> = (0..problem.users)
        .map(|i| WeightRow {
            user: i,
            s: problem.s[i],
            y_before: y_before[i],
            y_after: report.final_y.get(i).copied().unwrap_or(f64::NAN),
            w: report.final_w[i],
        })
        .collect();
    out.write_csv(
        "budget_weights.csv",
        &["user", "s", "y_before", "y_after", "w"],
        &rows,
    )?;
    out.write_trace("budget_trace.csv", &report)?;
    out.write_json("report_beers.json", &report)?;

    let summary = BudgetSummary {
        seed: config.seed,
        users: problem.users,
        edges: problem.edges,
        budget: problem.budget,
        alpha: step_value(opt.step, problem.decision.len()),
        initial_polarization: initial,
        final_polarization: last,
        reduction_pct: (initial - last) / initial * 100.0,
        budget_used: used,
        budget_slack: problem.budget - used,
        min_weight: report.final_w.iter().copied().fold(f64::INFINITY, f64::min),
        iterations: report.iterations,
        termination: termination_label(&report.termination),
        max_violation: report.max_violation,
        runtime_s: runtime,
        solve_fraction: report.timings.solve_fraction(),
        warnings: problem.warning.into_iter().collect(),
        outcome: if report.failed() {
            Outcome::failure(termination_label(&report.termination))
        } else {
            Outcome::success(format!(
                "polarization {initial:.6} -> {last:.6} in {} iterations",
                report.iterations
            ))
        },
    };
    out.write_json("budget.json", &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationRow {
    pub alpha: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: String,
    pub initial_phi: f64,
    pub final_phi: f64,
    pub runtime_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationSummary {
    pub seed: u64,
    pub users: usize,
    pub rows: Vec<AblationRow>,
    pub outcome: Outcome,
}

pub fn run_ablation(config: &ExperimentConfig) -> Result<AblationSummary> {
    let out = OutputDir::create(&config.output_dir)?;
    let problem = BudgetProblem::from_config(config)?;
    let base = problem.optimizer_config(config)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &alpha in &config.ablation.alphas {
        for &gamma in &config.ablation.gammas {
            let opt = OptimizerConfig {
                step: StepSize::Constant(alpha),
                gamma,
                ..base.clone()
            };
            let start = Instant::now();
            let report = problem.optimize(&opt)?;
            if report.failed() {
                failures.push(format!("alpha={alpha} gamma={gamma}"));
            }
            rows.push(AblationRow {
                alpha,
                gamma,
                iterations: report.iterations,
                converged: report.converged(),
                termination: termination_label(&report.termination),
                initial_phi: report.initial_phi().unwrap_or(f64::NAN),
                final_phi: report.final_phi().unwrap_or(f64::NAN),
                runtime_s: start.elapsed().as_secs_f64(),
            });
        }
    }
    out.write_csv(
        "ablation.csv",
        &[
            "alpha",
            "gamma",
            "iterations",
            "converged",
            "termination",
            "initial_phi",
            "final_phi",
            "runtime_s",
        ],
        &rows,
    )?;
    let summary = AblationSummary {
        seed: config.seed,
        users: problem.users,
        outcome: if failures.is_empty() {
            Outcome::success(format!("{} grid points", rows.len()))
        } else {
            Outcome::failure(format!("solver failed at {}", failures.join(", ")))
        },
        rows,
    };
    out.write_json("ablation.json", &summary)?;
    Ok(summary)
}

/// Synthetic polarized budget instance with `n` users used by the size
/// sweeps; the generator settings come from a polarized dataset in `config`
/// when present.
fn sized_problem(
    config: &ExperimentConfig,
    n: usize,
    avg_degree: f64,
    seed: u64,
) -> Result<BudgetProblem> {
    let split = match config.dataset {
        Some(Dataset::Polarized { split, .. }) => split,
        _ => 0.5,
    };
    let net = data::load(
        &Dataset::Polarized {
            n,
            avg_degree: avg_degree.min((n - 1) as f64),
            split,
        },
        None,
        seed,
    )?;
    let budget = config
        .problem
        .budget
        .unwrap_or(config.problem.budget_fraction * n as f64);
    BudgetProblem::new(&net, budget)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalabilityRow {
    pub n: usize,
    pub edges: usize,
    pub repeats: usize,
    pub mean_s: f64,
    pub std_s: f64,
    pub forward_s: f64,
    pub adjoint_s: f64,
    pub vjp_s: f64,
    pub objective_s: f64,
    pub projection_s: f64,
    pub solve_fraction: f64,
    /// Objective after the single update; identical across repeats.
    pub phi_after: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalabilitySummary {
    pub seed: u64,
    pub rows: Vec<ScalabilityRow>,
    pub outcome: Outcome,
}

/// Times one optimizer iteration (forward solve, adjoint solve, product,
/// projection and the evaluation of the next iterate) `repeats` times per
/// size.
pub fn run_scalability(config: &ExperimentConfig) -> Result<ScalabilitySummary> {
    let out = OutputDir::create(&config.output_dir)?;
    let sc = &config.scalability;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &n in &sc.sizes {
        let problem = sized_problem(config, n, sc.avg_degree, config.seed)?;
        let opt = OptimizerConfig {
            max_iters: 1,
            ..problem.optimizer_config(config)?
        };
        let mut totals = Vec::with_capacity(sc.repeats);
        let mut phase = [0.0f64; 5];
        let mut phi_after = f64::NAN;
        for _ in 0..sc.repeats {
            let report = problem.optimize(&opt)?;
            if report.failed() {
                failures.push(format!("n={n}: {}", termination_label(&report.termination)));
            }
            let t = &report.timings;
            totals.push(t.total);
            for (acc, v) in phase.iter_mut().zip([
                t.forward_solve,
                t.adjoint_solve,
                t.vjp,
                t.objective,
                t.projection,
            ]) {
                *acc += v / sc.repeats as f64;
            }
            phi_after = report.final_phi().unwrap_or(f64::NAN);
        }
        let (mean, std) = mean_std(&totals);
        rows.push(ScalabilityRow {
            n,
            edges: problem.edges,
            repeats: sc.repeats,
            mean_s: mean,
            std_s: std,
            forward_s: phase[0],
            adjoint_s: phase[1],
            vjp_s: phase[2],
            objective_s: phase[3],
            projection_s: phase[4],
            solve_fraction: (phase[0] + phase[1]) / mean,
            phi_after,
        });
    }
    out.write_csv(
        "scalability.csv",
        &[
            "n",
            "edges",
            "repeats",
            "mean_s",
            "std_s",
            "forward_s",
            "adjoint_s",
            "vjp_s",
            "objective_s",
            "projection_s",
            "solve_fraction",
            "phi_after",
        ],
        &rows,
    )?;
    let summary = ScalabilitySummary {
        seed: config.seed,
        outcome: if failures.is_empty() {
            Outcome::success(format!("{} sizes timed", rows.len()))
        } else {
            Outcome::failure(failures.join("; "))
        },
        rows,
    };
    out.write_json("scalability.json", &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct NormRow {
    pub n: usize,
    pub seed: u64,
    pub m: usize,
    pub grad_norm: f64,
    pub phi0: f64,
    pub iterations_auto: usize,
    pub iterations_constant: usize,
}

/// Medians over seeds for one size.
#[derive(Clone, Debug, Serialize)]
pub struct NormTrend {
    pub n: usize,
    pub grad_norm: f64,
    pub iterations_auto: f64,
    pub iterations_constant: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormStudySummary {
    pub constant_alpha: f64,
    pub rows: Vec<NormRow>,
    pub trend: Vec<NormTrend>,
    pub outcome: Outcome,
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let k = values.len() / 2;
    if values.len() % 2 == 1 {
        values[k]
    } else {
        0.5 * (values[k - 1] + values[k])
    }
}

/// `||grad||_2` of the budget objective at the start point, and the
/// iterations to converge with `alpha = n/100` and with a constant step, for
/// every size and seed.
pub fn run_norm_study(config: &ExperimentConfig) -> Result<NormStudySummary> {
    let out = OutputDir::create(&config.output_dir)?;
    let study = &config.norm_study;
    let avg_degree = match config.dataset {
        Some(Dataset::Polarized { avg_degree, .. }) => avg_degree,
        _ => crate::config::default_avg_degree(),
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &n in &study.sizes {
        for &seed in &study.seeds {
            let problem = sized_problem(config, n, avg_degree, seed)?;
            let r = hypergradient(
                &problem.decision,
                &problem.s,
                &problem.objective,
                &config.solver,
            )?;
            let auto = OptimizerConfig {
                step: StepSize::Auto(StepBasis::Count(n)),
                ..problem.optimizer_config(config)?
            };
            let constant = OptimizerConfig {
                step: StepSize::Constant(study.constant_alpha),
                ..auto.clone()
            };
            let mut iterations = [0; 2];
            for (slot, opt) in iterations.iter_mut().zip([auto, constant]) {
                let report = problem.optimize(&opt)?;
                if !report.converged() {
                    failures.push(format!(
                        "n={n} seed={seed}: {}",
                        termination_label(&report.termination)
                    ));
                }
                *slot = report.iterations;
            }
            rows.push(NormRow {
                n,
                seed,
                m: problem.decision.len(),
                grad_norm: norm2(&r.grad),
                phi0: r.phi,
                iterations_auto: iterations[0],
                iterations_constant: iterations[1],
            });
        }
    }
    let trend = study
        .sizes
        .iter()
        .map(|&n| {
            let of = |f: &dyn Fn(&NormRow) -> f64| {
                median(rows.iter().filter(|r| r.n == n).map(f).collect())
            };
            NormTrend {
                n,
                grad_norm: of(&|r| r.grad_norm),
                iterations_auto: of(&|r| r.iterations_auto as f64),
                iterations_constant: of(&|r| r.iterations_constant as f64),
            }
        })
        .collect();
    out.write_csv(
        "gradient_norms.csv",
        &[
            "n",
            "seed",
            "m",
            "grad_norm",
            "phi0",
            "iterations_auto",
            "iterations_constant",
        ],
        &rows,
    )?;
    let summary = NormStudySummary {
        constant_alpha: study.constant_alpha,
        outcome: if failures.is_empty() {
            Outcome::success(format!("{} rows", rows.len()))
        } else {
            Outcome::failure(format!("did not converge: {}", failures.join("; ")))
        },
        rows,
        trend,
    };
    out.write_json("norm_study.json", &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::OpinionKind;
    use fjnet::Topology;

    fn two_users(budget: f64) -> BudgetProblem {
        let net = Network {
            topology: Topology::empty(2),
            opinions: vec![1.0, -1.0],
            kind: OpinionKind::Internal,
            camp: None,
        };
        BudgetProblem::new(&net, budget).unwrap()
    }

    #[test]
    fn two_isolated_users_match_grid_search() {
        let p = two_users(4.0);
        let opt = OptimizerConfig {
            step: StepSize::Constant(1.0),
            epsilon: 1e-10,
            ..OptimizerConfig::default()
        };
        let r = p.optimize(&opt).unwrap();
        // with no user-user edges y_i = s_i / (1 + w_i): polarization
        // ((1/(1+a))^2 + (1/(1+b))^2) / 2 with a + b <= 4 is minimized at a = b = 2
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=400 {
            let a = i as f64 * 0.01;
            let b = 4.0 - a;
            let v = 0.5 * ((1.0 / (1.0 + a)).powi(2) + (1.0 / (1.0 + b)).powi(2));
            if v < best.0 {
                best = (v, a, b);
            }
        }
        assert!(r.final_phi().unwrap() < 1.0);
        assert!((r.final_phi().unwrap() - best.0).abs() < 1e-4);
        assert!((r.final_w[0] - best.1).abs() < 2e-2 && (r.final_w[1] - best.2).abs() < 2e-2);
    }

    #[test]
    fn zero_budget_keeps_weights_at_zero() {
        let p = two_users(0.0);
        let r = p.optimize(&OptimizerConfig::default()).unwrap();
        assert!(r.final_w.iter().all(|&w| w == 0.0));
        assert_eq!(r.initial_phi(), r.final_phi());
    }

    #[test]
    fn neutral_node_has_no_outgoing_edges() {
        let p = two_users(1.0);
        let t = p.decision.assemble().unwrap();
        assert_eq!(t.n(), 3);
        assert_eq!(t.row_sum(2), 0.0);
        assert_eq!(p.s[2], 0.0);
        assert_eq!(p.decision.len(), 2);
    }
}
