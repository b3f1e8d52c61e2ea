//! Self-checks runnable from the command line: hypergradients against
//! finite differences, and projections against the defining properties of a
//! Euclidean projection onto a closed convex set.

use std::time::Instant;

use anyhow::Result;
use fjnet::equilibrium::SolveMethod;
use fjnet::hypergradient::finite_difference_hypergradient;
use fjnet::objectives::{relative_error, ObjectiveParams};
use fjnet::{
    hypergradient, DecisionLayout, DecisionVector, FeasibleSet, LinearSolveConfig,
    ObjectiveRegistry, Primitive, ProjectionOptions, Topology,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Outcome;
use crate::config::ExperimentConfig;
use crate::output::OutputDir;

/// Gradients smaller than this are compared absolutely: central differences
/// at `h = 1e-6` carry about `1e-10` of rounding noise.
pub const FD_FLOOR: f64 = 1e-4;

/// Random layout on `n` nodes mixing free, tied (both directions of a pair)
/// and frozen slots, with positive weights.
pub fn random_decision(rng: &mut ChaCha8Rng, n: usize) -> DecisionVector {
    let mut b = DecisionLayout::builder(n);
    let mut used = std::collections::HashSet::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || used.contains(&(i, j)) {
                continue;
            }
            let r: f64 = rng.random();
            if r < 0.25 {
                b.variable(i, j);
                used.insert((i, j));
            } else if r < 0.35 && !used.contains(&(j, i)) {
                b.tied(&[(i, j), (j, i)]);
                used.insert((i, j));
                used.insert((j, i));
            } else if r < 0.45 {
                b.frozen(i, j, rng.random_range(0.1..2.0));
                used.insert((i, j));
            }
        }
    }
    let layout = b.build().expect("generated layout is valid");
    let values = (0..layout.len())
        .map(|_| rng.random_range(0.1..2.0))
        .collect();
    DecisionVector::new(layout, values).expect("one value per variable")
}

#[derive(Clone, Debug, Serialize)]
pub struct GradRow {
    pub instance: usize,
    pub n: usize,
    pub m: usize,
    pub objective: String,
    pub max_rel_err: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradcheckSummary {
    pub seed: u64,
    pub instances: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub runtime_s: f64,
    pub outcome: Outcome,
}

pub fn run_gradcheck(config: &ExperimentConfig) -> Result<GradcheckSummary> {
    let start = Instant::now();
    let out = OutputDir::create(&config.output_dir)?;
    let check = &config.check;
    let registry = ObjectiveRegistry::with_builtins();
    let tight = LinearSolveConfig::default().with_tol(1e-13);
    let dense = LinearSolveConfig::default().with_method(SolveMethod::DenseDirect);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = ObjectiveParams {
        lambda: config.problem.lambda,
        nodes: None,
    };
    let mut rows = Vec::new();
    let mut instance = 0;
    while instance < check.instances {
        let n = rng.random_range(2..=check.max_n.max(2));
        let d = random_decision(&mut rng, n);
        if d.is_empty() {
            continue;
        }
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let coords: Vec<usize> = (0..d.len()).collect();
        for name in registry.names() {
            let obj = registry.build(name, &params)?;
            let r = hypergradient(&d, &s, obj.as_ref(), &tight)?;
            let fd =
                finite_difference_hypergradient(&d, &s, obj.as_ref(), &dense, check.step, &coords)?;
            let worst = r
                .grad
                .iter()
                .zip(&fd)
                .map(|(&a, &b)| relative_error(a, b, FD_FLOOR))
                .fold(0.0, f64::max);
            rows.push(GradRow {
                instance,
                n,
                m: d.len(),
                objective: name.into(),
                max_rel_err: worst,
                pass: worst <= check.tolerance,
            });
        }
        instance += 1;
    }
    out.write_csv(
        "gradcheck.csv",
        &["instance", "n", "m", "objective", "max_rel_err", "pass"],
        &rows,
    )?;
    let worst = rows.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
    let failed = rows.iter().filter(|r| !r.pass).count();
    let summary = GradcheckSummary {
        seed: config.seed,
        instances: instance,
        worst,
        tolerance: check.tolerance,
        runtime_s: start.elapsed().as_secs_f64(),
        outcome: if failed == 0 {
            Outcome::success(format!(
                "{} gradients within {:e}",
                rows.len(),
                check.tolerance
            ))
        } else {
            Outcome::failure(format!(
                "{failed} of {} gradients exceed {:e}",
                rows.len(),
                check.tolerance
            ))
        },
    };
    out.write_json("gradcheck.json", &summary)?;
    Ok(summary)
}

/// Constraint families exercised by the projection check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `w >= 0`, `sum_S w <= b`.
    Budget,
    /// Degree equalities, a Frobenius ball and `w >= 0` on directed edges.
    DegreeBall,
    /// The same on the tied pairs of an undirected network.
    UndirectedDegreeBall,
    /// Degree equalities, a budget and `w >= 0` (alternating projections).
    DegreeBudget,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Budget,
        Family::DegreeBall,
        Family::UndirectedDegreeBall,
        Family::DegreeBudget,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Budget => "budget",
            Family::DegreeBall => "degree-ball",
            Family::UndirectedDegreeBall => "undirected-degree-ball",
            Family::DegreeBudget => "degree-budget",
        }
    }
}

fn random_network(rng: &mut ChaCha8Rng, n: usize, undirected: bool) -> Topology {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || (undirected && j < i) || !rng.random_bool(0.5) {
                continue;
            }
            let w = rng.random_range(0.2..2.0);
            edges.push((i, j, w));
            if undirected {
                edges.push((j, i, w));
            }
        }
    }
    Topology::from_edges(n, edges).expect("generated edges are valid")
}

/// Largest decision dimension drawn by [`random_set`].
pub const MAX_SET_DIM: usize = 30;

/// A random non-empty set of `family` with a feasible reference point.
pub fn random_set(rng: &mut ChaCha8Rng, family: Family) -> Result<(FeasibleSet, Vec<f64>)> {
    loop {
        match family {
            Family::Budget => {
                let m = rng.random_range(2..=MAX_SET_DIM);
                let subset: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.7)).collect();
                let set = FeasibleSet::budget(m, subset, rng.random_range(0.1..3.0))?;
                return Ok((set, vec![0.0; m]));
            }
            Family::DegreeBall | Family::UndirectedDegreeBall | Family::DegreeBudget => {
                let n = rng.random_range(3..=7);
                let undirected = family == Family::UndirectedDegreeBall;
                let base = random_network(rng, n, undirected);
                if base.nnz() == 0 {
                    continue;
                }
                let reference = if undirected {
                    let mut b = DecisionLayout::builder(n);
                    for (i, j, _) in base.entries() {
                        if i < j {
                            b.tied(&[(i, j), (j, i)]);
                        }
                    }
                    DecisionVector::from_topology(b.build()?, &base)?
                } else {
                    DecisionVector::from_topology(DecisionLayout::existing_edges(&base)?, &base)?
                };
                let m = reference.len();
                if m > MAX_SET_DIM {
                    continue;
                }
                let mut primitives = vec![Primitive::degree_preserving(&reference)];
                if family == Family::DegreeBudget {
                    let total: f64 = reference.values().iter().sum();
                    primitives.push(Primitive::budget(m, total * rng.random_range(1.0..1.5)));
                } else {
                    primitives.push(Primitive::frobenius_fraction(
                        &reference,
                        rng.random_range(0.05..0.5),
                    )?);
                }
                primitives.push(Primitive::NonNegative);
                let set = FeasibleSet::with_initial(
                    m,
                    primitives,
                    ProjectionOptions {
                        tol: 1e-11,
                        ..ProjectionOptions::default()
                    },
                    reference.values(),
                )?;
                return Ok((set, reference.values().to_vec()));
            }
        }
    }
}

fn dot_diff(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(c.iter().zip(d))
        .map(|((a, b), (c, d))| (a - b) * (c - d))
        .sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    dot_diff(a, b, a, b).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionRow {
    pub family: Family,
    pub instance: usize,
    pub m: usize,
    pub pieces: usize,
    /// Worst constraint violation of the projection.
    pub violation: f64,
    /// `||P(P(w)) - P(w)||`.
    pub idempotence: f64,
    /// `max(0, ||P(a) - P(b)|| - ||a - b||)`.
    pub expansion: f64,
    /// Largest `(w - P(w)) . (x - P(w))` over sampled members `x`; a
    /// projection makes this non-positive.
    pub variational: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectCheckSummary {
    pub seed: u64,
    pub instances: usize,
    pub tolerance: f64,
    pub outcome: Outcome,
}

pub fn run_project_check(config: &ExperimentConfig) -> Result<ProjectCheckSummary> {
    let out = OutputDir::create(&config.output_dir)?;
    let tol = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::new();
    for family in Family::ALL {
        for instance in 0..config.check.instances {
            let (set, center) = random_set(&mut rng, family)?;
            let m = set.dim();
            let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                center
                    .iter()
                    .map(|c| c + rng.random_range(-2.0..2.0))
                    .collect()
            };
            let w = sample(&mut rng);
            let other = sample(&mut rng);
            let z = set.project(&w)?;
            let zz = set.project(&z)?;
            let z_other = set.project(&other)?;
            let mut variational = f64::NEG_INFINITY;
            for _ in 0..5 {
                let x = set.project(&sample(&mut rng))?;
                variational = variational.max(dot_diff(&w, &z, &x, &z));
            }
            let violation = set.check_membership(&z).worst();
            let idempotence = dist(&zz, &z);
            let expansion = (dist(&z, &z_other) - dist(&w, &other)).max(0.0);
            rows.push(ProjectionRow {
                family,
                instance,
                m,
                pieces: set.piece_count(),
                violation,
                idempotence,
                expansion,
                variational,
                pass: violation <= tol
                    && idempotence <= tol
                    && expansion <= tol
                    && variational <= tol * (1.0 + dist(&w, &z)),
            });
        }
    }
    out.write_csv(
        "project_check.csv",
        &[
            "family",
            "instance",
            "m",
            "pieces",
            "violation",
            "idempotence",
            "expansion",
            "variational",
            "pass",
        ],
        &rows,
    )?;
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{}#{}", r.family.name(), r.instance))
        .collect();
    let summary = ProjectCheckSummary {
        seed: config.seed,
        instances: rows.len(),
        tolerance: tol,
        outcome: if failed.is_empty() {
            Outcome::success(format!("{} projections checked", rows.len()))
        } else {
            Outcome::failure(format!("failed: {}", failed.join(", ")))
        },
    };
    out.write_json("project_check.json", &summary)?;
    Ok(summary)
}
