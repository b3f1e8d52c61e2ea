//! BeeRS against NAD and NAD* on an undirected network with expressed
//! opinions. Every unordered pair is a decision variable, so the methods may
//! create edges as well as reweight them. Internal opinions are recovered
//! as `s = A(w0) y`.

use std::time::Instant;

use anyhow::{Context, Result};
use fjnet::objectives::{disagreement, polarization_variance, Disagreement};
use fjnet::report::percent_change;
use fjnet::{
    build_system, nad_feasible_set, nad_run, optimize, solve_equilibrium, DecisionLayout,
    DecisionVector, SolveReport,
};
use serde::Serialize;

use super::{termination_label, Outcome};
use crate::config::{Algorithm, ExperimentConfig};
use crate::data;
use crate::output::{CampStatistics, InterventionScatter, OutputDir};

#[derive(Clone, Debug, Serialize)]
pub struct AlgorithmResult {
    pub algorithm: String,
    pub runtime_s: f64,
    pub iterations: usize,
    pub termination: String,
    pub d_before: f64,
    pub d_after: f64,
    pub d_change_pct: f64,
    pub p_before: f64,
    pub p_after: f64,
    pub p_change_pct: f64,
    pub max_violation: f64,
    /// Largest change of a row sum of the decision weights.
    pub max_degree_drift: f64,
    pub camps: CampStatistics,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareSummary {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub lambda: f64,
    /// `||A(w0) y - s||_inf` after recovering `s`.
    pub recovery_error: f64,
    pub results: Vec<AlgorithmResult>,
    pub warnings: Vec<String>,
    pub outcome: Outcome,
}

impl CompareSummary {
    pub fn result(&self, algorithm: Algorithm) -> Option<&AlgorithmResult> {
        self.results
            .iter()
            .find(|r| r.algorithm == algorithm.name())
    }
}

fn row_sums(layout: &DecisionLayout, w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; layout.n()];
    for k in 0..layout.len() {
        for &(i, _) in layout.slots(k) {
            out[i] += w[k];
        }
    }
    out
}

pub fn run_nad_compare(
    config: &ExperimentConfig,
    algorithms: &[Algorithm],
) -> Result<CompareSummary> {
    let out = OutputDir::create(&config.output_dir)?;
    let dataset = config
        .dataset
        .as_ref()
        .context("nad-compare needs a dataset")?;
    let net = data::load(dataset, config.problem.truncate, config.seed)?;
    anyhow::ensure!(
        net.topology.is_symmetric(1e-12),
        "nad-compare needs an undirected network"
    );
    let n = net.n();
    let (s, warning) = net.internal()?;
    let mut warnings: Vec<String> = warning.into_iter().collect();

    let layout = DecisionLayout::complete_undirected(n)?;
    let reference = DecisionVector::from_topology(layout.clone(), &net.topology)?;
    let system = build_system(reference.assemble()?, &s)?;
    let y0 = solve_equilibrium(&system, &config.solver, None)?.x;
    let recovery_error = y0
        .iter()
        .zip(&net.opinions)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let d0 = disagreement(system.topology(), &y0);
    let p0 = polarization_variance(&y0);
    let y_bar = y0.iter().sum::<f64>() / n as f64;
    let rows0 = row_sums(&layout, reference.values());

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for &alg in algorithms {
        let start = Instant::now();
        let report: SolveReport = match alg {
            Algorithm::Beers => {
                let nad = config.nad_config(0.0);
                let set = nad_feasible_set(&reference, &nad)?;
                let opt = config.optimizer_config(reference.len())?;
                optimize(&reference, &s, &Disagreement, &set, &opt)?
            }
            Algorithm::Nad | Algorithm::NadStar => {
                let lambda = if alg == Algorithm::Nad {
                    0.0
                } else {
                    config.problem.lambda
                };
                let nad = config.nad_config(lambda);
                let set = nad_feasible_set(&reference, &nad)?;
                nad_run(&reference, &s, &set, &nad)?
            }
        };
        let runtime = start.elapsed().as_secs_f64();
        if report.failed() {
            failures.push(format!(
                "{}: {}",
                alg.name(),
                termination_label(&report.termination)
            ));
        } else if !report.converged() {
            warnings.push(format!("{} stopped at the iteration limit", alg.name()));
        }
        let after = reference.with_values(report.final_w.clone())?;
        let topology = after.assemble()?;
        let d1 = disagreement(&topology, &report.final_y);
        let p1 = polarization_variance(&report.final_y);
        let scatter = InterventionScatter::new(&layout, &y0, reference.values(), &report.final_w);
        let drift = row_sums(&layout, &report.final_w)
            .iter()
            .zip(&rows0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        out.write_csv(
            &format!("scatter_{}.csv", alg.name()),
            InterventionScatter::HEADER,
            &scatter.rows,
        )?;
        out.write_trace(&format!("trace_{}.csv", alg.name()), &report)?;
        out.write_json(&format!("report_{}.json", alg.name()), &report)?;
        results.push(AlgorithmResult {
            algorithm: alg.name().into(),
            runtime_s: runtime,
            iterations: report.iterations,
            termination: termination_label(&report.termination),
            d_before: d0,
            d_after: d1,
            d_change_pct: percent_change(d0, d1),
            p_before: p0,
            p_after: p1,
            p_change_pct: percent_change(p0, p1),
            max_violation: report.max_violation,
            max_degree_drift: drift,
            camps: scatter.camp_statistics(y_bar),
        });
    }

    #[derive(Serialize)]
    struct Row<'a> {
        algorithm: &'a str,
        runtime_s: f64,
        iterations: usize,
        termination: &'a str,
        d_change_pct: f64,
        p_change_pct: f64,
        max_violation: f64,
    }
    let rows: Vec<Row> = results
        .iter()
        .map(|r| Row {
            algorithm: &r.algorithm,
            runtime_s: r.runtime_s,
            iterations: r.iterations,
            termination: &r.termination,
            d_change_pct: r.d_change_pct,
            p_change_pct: r.p_change_pct,
            max_violation: r.max_violation,
        })
        .collect();
    out.write_csv(
        "compare.csv",
        &[
            "algorithm",
            "runtime_s",
            "iterations",
            "termination",
            "d_change_pct",
            "p_change_pct",
            "max_violation",
        ],
        &rows,
    )?;

    let summary = CompareSummary {
        seed: config.seed,
        n,
        m: reference.len(),
        delta: config.problem.delta,
        lambda: config.problem.lambda,
        recovery_error,
        outcome: if failures.is_empty() {
            Outcome::success(format!("{} algorithms compared", results.len()))
        } else {
            Outcome::failure(failures.join("; "))
        },
        results,
        warnings,
    };
    out.write_json("nad_compare.json", &summary)?;
    Ok(summary)
}
