//! The two-node network: one undirected edge of weight `w`, internal
//! opinions `(1, 0)`, and a Frobenius ball of fraction `delta` around `w = 1`.

use std::time::Instant;

use anyhow::Result;
use fjnet::objectives::{disagreement, Disagreement};
use fjnet::{
    build_system, nad_feasible_set, nad_run, optimize, solve_equilibrium, DecisionLayout,
    DecisionVector, NadConfig, Primitive,
};
use serde::Serialize;

use super::{termination_label, Outcome};
use crate::config::{Algorithm, ExperimentConfig};
use crate::output::OutputDir;

pub const TOY_S: [f64; 2] = [1.0, 0.0];
pub const CURVE_POINTS: usize = 201;

/// The decision vector `w = w_01 = w_10`.
pub fn toy_decision(w: f64) -> DecisionVector {
    let mut b = DecisionLayout::builder(2);
    b.tied(&[(0, 1), (1, 0)]);
    DecisionVector::new(b.build().expect("valid layout"), vec![w]).expect("one variable")
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    pub w: f64,
    pub disagreement: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ToyMarker {
    pub algorithm: String,
    pub w: f64,
    pub disagreement: f64,
    pub iterations: usize,
    pub termination: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ToySummary {
    pub seed: u64,
    pub equilibrium_at_one: Vec<f64>,
    pub disagreement_at_one: f64,
    pub bounds: (f64, f64),
    pub markers: Vec<ToyMarker>,
    pub runtime_s: f64,
    pub outcome: Outcome,
}

impl ToySummary {
    pub fn marker(&self, algorithm: Algorithm) -> Option<&ToyMarker> {
        self.markers
            .iter()
            .find(|m| m.algorithm == algorithm.name())
    }
}

fn evaluate(w: f64, config: &ExperimentConfig) -> Result<CurvePoint> {
    let d = toy_decision(w);
    let system = build_system(d.assemble()?, &TOY_S)?;
    let y = solve_equilibrium(&system, &config.solver, None)?.x;
    Ok(CurvePoint {
        w,
        disagreement: disagreement(system.topology(), &y),
        y0: y[0],
        y1: y[1],
    })
}

pub fn run_toy(config: &ExperimentConfig, algorithms: &[Algorithm]) -> Result<ToySummary> {
    let start = Instant::now();
    let out = OutputDir::create(&config.output_dir)?;
    let curve: Vec<CurvePoint> = (0..CURVE_POINTS)
        .map(|i| evaluate(2.0 * i as f64 / (CURVE_POINTS - 1) as f64, config))
        .collect::<Result<_>>()?;
    out.write_csv("toy_curve.csv", &["w", "disagreement", "y0", "y1"], &curve)?;
    let at_one = evaluate(1.0, config)?;

    let reference = toy_decision(1.0);
    let delta = config.problem.delta;
    let mut markers = Vec::new();
    let mut failures = Vec::new();
    for &alg in algorithms {
        let report = match alg {
            Algorithm::Beers => {
                let nad = NadConfig {
                    delta,
                    degree_preserving: false,
                    projection: config.projection,
                    ..NadConfig::default()
                };
                let set = nad_feasible_set(&reference, &nad)?;
                let opt = config.optimizer_config(reference.len())?;
                optimize(&reference, &TOY_S, &Disagreement, &set, &opt)?
            }
            Algorithm::Nad | Algorithm::NadStar => {
                let lambda = if alg == Algorithm::Nad {
                    0.0
                } else {
                    config.problem.lambda
                };
                let mut nad = config.nad_config(lambda);
                nad.degree_preserving = false;
                let set = nad_feasible_set(&reference, &nad)?;
                nad_run(&reference, &TOY_S, &set, &nad)?
            }
        };
        if report.failed() {
            failures.push(format!(
                "{}: {}",
                alg.name(),
                termination_label(&report.termination)
            ));
        }
        out.write_trace(&format!("trace_{}.csv", alg.name()), &report)?;
        let w = report.final_w[0];
        markers.push(ToyMarker {
            algorithm: alg.name().into(),
            w,
            disagreement: evaluate(w, config)?.disagreement,
            iterations: report.iterations,
            termination: termination_label(&report.termination),
        });
    }

    let half_width = match Primitive::frobenius_fraction(&reference, delta)? {
        Primitive::FrobeniusBall { radius, metric, .. } => radius / metric[0].sqrt(),
        _ => unreachable!("frobenius_fraction builds a ball"),
    };
    let summary = ToySummary {
        seed: config.seed,
        equilibrium_at_one: vec![at_one.y0, at_one.y1],
        disagreement_at_one: at_one.disagreement,
        bounds: (1.0 - half_width, 1.0 + half_width),
        markers,
        runtime_s: start.elapsed().as_secs_f64(),
        outcome: if failures.is_empty() {
            Outcome::success("toy example finished")
        } else {
            Outcome::failure(failures.join("; "))
        },
    };
    out.write_json("toy.json", &summary)?;
    Ok(summary)
}
