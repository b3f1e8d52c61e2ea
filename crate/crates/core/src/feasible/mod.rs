//! Feasible sets of decision weights and Euclidean projection onto them.
//!
//! A [`FeasibleSet`] is an intersection of [`Primitive`]s over the decision
//! vector. At construction the primitives are compiled into as few exactly
//! projectable pieces as possible. Tie classes, degree equalities, lower
//! bounds and at most one ball centered inside the affine part form a single
//! polytope piece, projected by a semismooth Newton method on the dual. Lower
//! bounds with a budget merge into one box-simplex projection. A single piece
//! is projected directly; several are combined with Dykstra's algorithm.

mod affine;
pub mod closed_form;
mod polytope;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DecisionLayout, DecisionVector};
use affine::AffineProjector;
pub use closed_form::project_budget_nonneg;
use polytope::PolytopeProjector;

/// A convex constraint on the decision vector.
#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    /// `w >= 0`.
    NonNegative,
    /// `w_k >= l_k`.
    BoxLower(Vec<f64>),
    /// `sum_{k in subset} w_k <= bound`.
    BudgetHalfspace { subset: Vec<usize>, bound: f64 },
    /// `sum_k a_rk w_k = target_r` for every row `r`, with `rows[r]` listing
    /// `(k, a_rk)`.
    DegreeEquality {
        rows: Vec<Vec<(usize, f64)>>,
        targets: Vec<f64>,
    },
    /// `sum_k metric_k (w_k - center_k)^2 <= radius^2`.
    FrobeniusBall {
        center: Vec<f64>,
        radius: f64,
        metric: Vec<f64>,
    },
    /// Variables in the same group take equal values.
    TieGroups(Vec<Vec<usize>>),
}

impl Primitive {
    pub fn name(&self) -> &'static str {
        match self {
            Primitive::NonNegative => "non-negative",
            Primitive::BoxLower(_) => "box-lower",
            Primitive::BudgetHalfspace { .. } => "budget",
            Primitive::DegreeEquality { .. } => "degree-equality",
            Primitive::FrobeniusBall { .. } => "frobenius-ball",
            Primitive::TieGroups(_) => "tie-groups",
        }
    }

    /// Budget over every decision variable.
    pub fn budget(m: usize, bound: f64) -> Self {
        Primitive::BudgetHalfspace {
            subset: (0..m).collect(),
            bound,
        }
    }

    /// Keeps every row sum of the network at its value under `reference`.
    ///
    /// Row `i` collects the decision variables governing slots `(i, j)`; a
    /// variable governing several such slots enters with their count. Frozen
    /// slots are constant, so their contribution cancels from both sides.
    pub fn degree_preserving(reference: &DecisionVector) -> Self {
        let layout = reference.layout();
        let rows = degree_rows(layout);
        let targets = rows
            .iter()
            .map(|row| row.iter().map(|&(k, a)| a * reference.values()[k]).sum())
            .collect();
        Primitive::DegreeEquality { rows, targets }
    }

    /// Row sums of the full network fixed at `row_sums`; frozen weight is
    /// subtracted to obtain the targets on the decision variables.
    pub fn degree_targets(layout: &DecisionLayout, row_sums: &[f64]) -> Result<Self> {
        if row_sums.len() != layout.n() {
            return Err(Error::DimensionMismatch {
                what: "row-sum targets",
                expected: layout.n(),
                actual: row_sums.len(),
            });
        }
        let targets = row_sums
            .iter()
            .zip(layout.frozen_row_sums())
            .map(|(t, f)| t - f)
            .collect();
        Ok(Primitive::DegreeEquality {
            rows: degree_rows(layout),
            targets,
        })
    }

    /// `||W - W0||_F <= delta ||W0||_F`, where `W0` is the network assembled
    /// from `reference` (frozen slots included in the norm). Slots tied to one
    /// variable each count toward the Frobenius norm.
    pub fn frobenius_fraction(reference: &DecisionVector, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "ball fraction must be >= 0, got {delta}"
            )));
        }
        let norm = reference.assemble()?.frobenius_norm();
        Ok(Primitive::FrobeniusBall {
            center: reference.values().to_vec(),
            radius: delta * norm,
            metric: reference.layout().multiplicities(),
        })
    }

    /// Largest violation of this constraint at `w`; 0 when satisfied.
    pub fn violation(&self, w: &[f64]) -> f64 {
        match self {
            Primitive::NonNegative => w.iter().fold(0.0, |v, &x| v.max(-x)),
            Primitive::BoxLower(lower) => w.iter().zip(lower).fold(0.0, |v, (&x, &l)| v.max(l - x)),
            Primitive::BudgetHalfspace { subset, bound } => {
                (subset.iter().map(|&k| w[k]).sum::<f64>() - bound).max(0.0)
            }
            Primitive::DegreeEquality { rows, targets } => rows
                .iter()
                .zip(targets)
                .map(|(row, d)| (row.iter().map(|&(k, a)| a * w[k]).sum::<f64>() - d).abs())
                .fold(0.0, f64::max),
            Primitive::FrobeniusBall {
                center,
                radius,
                metric,
            } => {
                let size: f64 = w
                    .iter()
                    .zip(center)
                    .zip(metric)
                    .map(|((x, c), q)| q * (x - c) * (x - c))
                    .sum();
                (size.sqrt() - radius).max(0.0)
            }
            Primitive::TieGroups(groups) => groups
                .iter()
                .filter(|g| !g.is_empty())
                .map(|g| {
                    let mean = g.iter().map(|&k| w[k]).sum::<f64>() / g.len() as f64;
                    g.iter().fold(0.0f64, |v, &k| v.max((w[k] - mean).abs()))
                })
                .fold(0.0, f64::max),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let check_len = |what, len| {
            if len == dim {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    what,
                    expected: dim,
                    actual: len,
                })
            }
        };
        let check_index = |what, k: usize| {
            if k < dim {
                Ok(())
            } else {
                Err(Error::IndexOutOfRange {
                    what,
                    index: k,
                    size: dim,
                })
            }
        };
        match self {
            Primitive::NonNegative => Ok(()),
            Primitive::BoxLower(lower) => {
                check_len("lower bounds", lower.len())?;
                if lower.iter().any(|l| !l.is_finite()) {
                    return Err(Error::NonFinite {
                        location: "lower bounds".into(),
                    });
                }
                Ok(())
            }
            Primitive::BudgetHalfspace { subset, bound } => {
                subset
                    .iter()
                    .try_for_each(|&k| check_index("budget index", k))?;
                if !bound.is_finite() {
                    return Err(Error::NonFinite {
                        location: "budget".into(),
                    });
                }
                Ok(())
            }
            Primitive::DegreeEquality { rows, targets } => {
                if rows.len() != targets.len() {
                    return Err(Error::DimensionMismatch {
                        what: "degree targets",
                        expected: rows.len(),
                        actual: targets.len(),
                    });
                }
                rows.iter()
                    .flatten()
                    .try_for_each(|&(k, _)| check_index("degree variable", k))
            }
            Primitive::FrobeniusBall {
                center,
                radius,
                metric,
            } => {
                check_len("ball center", center.len())?;
                check_len("ball metric", metric.len())?;
                if !(*radius >= 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "ball radius must be >= 0, got {radius}"
                    )));
                }
                if metric.iter().any(|q| !(*q > 0.0)) {
                    return Err(Error::InvalidConfig("ball metric must be positive".into()));
                }
                Ok(())
            }
            Primitive::TieGroups(groups) => groups
                .iter()
                .flatten()
                .try_for_each(|&k| check_index("tied variable", k)),
        }
    }
}

fn degree_rows(layout: &DecisionLayout) -> Vec<Vec<(usize, f64)>> {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); layout.n()];
    for k in 0..layout.len() {
        for &(i, _) in layout.slots(k) {
            match rows[i].last_mut() {
                Some((last, a)) if *last == k => *a += 1.0,
                _ => rows[i].push((k, 1.0)),
            }
        }
    }
    rows
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionOptions {
    /// Target for both the per-sweep change and every constraint violation.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 10_000,
        }
    }
}

/// Violation of every primitive at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    pub violations: Vec<(String, f64)>,
}

impl MembershipReport {
    pub fn worst(&self) -> f64 {
        self.violations.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }

    pub fn is_member(&self, tol: f64) -> bool {
        self.worst() <= tol
    }
}

#[derive(Clone, Debug)]
enum Piece {
    Lower(Vec<f64>),
    LowerBudget {
        lower: Vec<f64>,
        subset: Vec<usize>,
        bound: f64,
    },
    Halfspace {
        subset: Vec<usize>,
        bound: f64,
    },
    Ellipsoid {
        center: Vec<f64>,
        metric: Vec<f64>,
        radius: f64,
    },
    Affine(AffineProjector),
    /// Ties, rows, lower bounds and at most one ball, projected exactly.
    Polytope(PolytopeProjector),
    /// Affine set intersected with an isotropic ball centered inside it.
    AffineBall {
        affine: AffineProjector,
        center: Vec<f64>,
        radius: f64,
    },
}

impl Piece {
    fn project(&self, w: &mut [f64]) -> Result<()> {
        match self {
            Piece::Lower(lower) => closed_form::project_lower(w, lower),
            Piece::LowerBudget {
                lower,
                subset,
                bound,
            } => {
                let z = closed_form::project_budget_lower(w, subset, *bound, lower);
                w.copy_from_slice(&z);
            }
            Piece::Halfspace { subset, bound } => closed_form::project_halfspace(w, subset, *bound),
            Piece::Ellipsoid {
                center,
                metric,
                radius,
            } => closed_form::project_ellipsoid(w, center, metric, *radius),
            Piece::Affine(a) => a.project(w)?,
            Piece::Polytope(p) => p.project(w)?,
            Piece::AffineBall {
                affine,
                center,
                radius,
            } => {
                affine.project(w)?;
                let dist = w
                    .iter()
                    .zip(center)
                    .map(|(x, c)| (x - c) * (x - c))
                    .sum::<f64>()
                    .sqrt();
                if dist > *radius {
                    let scale = radius / dist;
                    for (x, c) in w.iter_mut().zip(center) {
                        *x = c + scale * (*x - c);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Diagnostics of one projection.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ProjectionStats {
    /// Dykstra sweeps; 0 for closed-form projections.
    pub sweeps: usize,
    pub worst_violation: f64,
}

/// Intersection of primitives over a decision vector of fixed length.
#[derive(Clone, Debug)]
pub struct FeasibleSet {
    dim: usize,
    primitives: Vec<Primitive>,
    options: ProjectionOptions,
    pieces: Vec<Piece>,
}

impl FeasibleSet {
    pub fn new(dim: usize, primitives: Vec<Primitive>, options: ProjectionOptions) -> Result<Self> {
        if !(options.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "projection tolerance must be positive, got {}",
                options.tol
            )));
        }
        for p in &primitives {
            p.validate(dim)?;
        }
        let pieces = compile(dim, &primitives)?;
        Ok(Self {
            dim,
            primitives,
            options,
            pieces,
        })
    }

    /// As [`FeasibleSet::new`], then verifies the intersection is non-empty by
    /// projecting `initial` and checking membership.
    pub fn with_initial(
        dim: usize,
        primitives: Vec<Primitive>,
        options: ProjectionOptions,
        initial: &[f64],
    ) -> Result<Self> {
        let set = Self::new(dim, primitives, options)?;
        set.ensure_nonempty(initial)?;
        Ok(set)
    }

    /// `{w >= 0, sum_S w <= b}`.
    pub fn budget(dim: usize, subset: Vec<usize>, bound: f64) -> Result<Self> {
        if !(bound >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "budget must be >= 0, got {bound}"
            )));
        }
        Self::new(
            dim,
            vec![
                Primitive::NonNegative,
                Primitive::BudgetHalfspace { subset, bound },
            ],
            ProjectionOptions::default(),
        )
    }

    /// Only non-negativity.
    pub fn nonnegative(dim: usize) -> Self {
        Self::new(
            dim,
            vec![Primitive::NonNegative],
            ProjectionOptions::default(),
        )
        .expect("orthant is always valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn options(&self) -> &ProjectionOptions {
        &self.options
    }

    /// Number of pieces Dykstra alternates over after merging (1 means the
    /// projection is exact).
    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn project(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.project_with_stats(w).map(|(z, _)| z)
    }

    pub fn project_with_stats(&self, w: &[f64]) -> Result<(Vec<f64>, ProjectionStats)> {
        if w.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "point to project",
                expected: self.dim,
                actual: w.len(),
            });
        }
        if let Some(k) = w.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("projection input entry {k}"),
            });
        }
        let mut x = w.to_vec();
        match self.pieces.len() {
            0 => Ok((x, ProjectionStats::default())),
            1 => {
                self.pieces[0].project(&mut x)?;
                let worst = self.check_membership(&x).worst();
                Ok((
                    x,
                    ProjectionStats {
                        sweeps: 0,
                        worst_violation: worst,
                    },
                ))
            }
            _ => self.dykstra(x),
        }
    }

    fn dykstra(&self, mut x: Vec<f64>) -> Result<(Vec<f64>, ProjectionStats)> {
        let tol = self.options.tol;
        let mut increments = vec![vec![0.0; self.dim]; self.pieces.len()];
        let mut before = vec![0.0; self.dim];
        let mut worst = f64::INFINITY;
        for sweep in 1..=self.options.max_sweeps {
            let mut change = 0.0f64;
            for (piece, p) in self.pieces.iter().zip(increments.iter_mut()) {
                for ((b, xi), pi) in before.iter_mut().zip(x.iter_mut()).zip(p.iter()) {
                    *xi += pi;
                    *b = *xi;
                }
                piece.project(&mut x)?;
                for ((pi, b), xi) in p.iter_mut().zip(&before).zip(&x) {
                    let next = b - xi;
                    change = change.max((next - *pi).abs());
                    *pi = next;
                }
            }
            if change <= tol {
                worst = self.check_membership(&x).worst();
                if worst <= tol {
                    return Ok((
                        x,
                        ProjectionStats {
                            sweeps: sweep,
                            worst_violation: worst,
                        },
                    ));
                }
            }
        }
        if !worst.is_finite() {
            worst = self.check_membership(&x).worst();
        }
        Err(Error::ProjectionDidNotConverge {
            iterations: self.options.max_sweeps,
            worst_violation: worst,
        })
    }

    pub fn check_membership(&self, w: &[f64]) -> MembershipReport {
        MembershipReport {
            violations: self
                .primitives
                .iter()
                .map(|p| (p.name().to_owned(), p.violation(w)))
                .collect(),
        }
    }

    /// Projects `initial` and fails with [`Error::Infeasible`] unless the
    /// result satisfies every primitive to tolerance.
    pub fn ensure_nonempty(&self, initial: &[f64]) -> Result<Vec<f64>> {
        let infeasible = |detail: String| {
            Error::Infeasible(format!(
                "intersection of [{}] appears empty: {detail}",
                self.primitives
                    .iter()
                    .map(Primitive::name)
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        };
        let z = match self.project(initial) {
            Ok(z) => z,
            Err(Error::ProjectionDidNotConverge {
                worst_violation, ..
            }) => {
                return Err(infeasible(format!(
                    "projection stalled at violation {worst_violation:.3e}"
                )))
            }
            Err(e) => return Err(e),
        };
        let report = self.check_membership(&z);
        if !report.is_member(self.options.tol.max(1e-9)) {
            return Err(infeasible(format!("violation {:.3e}", report.worst())));
        }
        Ok(z)
    }
}

fn compile(dim: usize, primitives: &[Primitive]) -> Result<Vec<Piece>> {
    let mut lower: Option<Vec<f64>> = None;
    let mut budgets = Vec::new();
    let mut ties: Vec<Vec<usize>> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    let mut balls = Vec::new();
    for p in primitives {
        match p {
            Primitive::NonNegative => {
                let l = lower.get_or_insert_with(|| vec![f64::NEG_INFINITY; dim]);
                l.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            Primitive::BoxLower(bounds) => {
                let l = lower.get_or_insert_with(|| vec![f64::NEG_INFINITY; dim]);
                for (v, b) in l.iter_mut().zip(bounds) {
                    *v = v.max(*b);
                }
            }
            Primitive::BudgetHalfspace { subset, bound } => budgets.push((subset.clone(), *bound)),
            Primitive::DegreeEquality {
                rows: r,
                targets: t,
            } => {
                rows.extend(r.iter().cloned());
                targets.extend_from_slice(t);
            }
            Primitive::FrobeniusBall {
                center,
                radius,
                metric,
            } => balls.push((center.clone(), *radius, metric.clone())),
            Primitive::TieGroups(groups) => ties.extend(groups.iter().cloned()),
        }
    }

    let mut affine = if ties.is_empty() && rows.is_empty() {
        None
    } else {
        Some(AffineProjector::new(dim, &ties, &rows, &targets)?)
    };
    if let Some(l) = &lower {
        if budgets.is_empty() && balls.len() <= 1 {
            let ball = balls
                .first()
                .map(|(c, r, q)| (c.as_slice(), q.as_slice(), *r));
            if let Some(p) = PolytopeProjector::new(affine.as_ref(), dim, l, ball) {
                return Ok(vec![Piece::Polytope(p)]);
            }
        }
    }

    let mut pieces = Vec::new();

    let mut ellipsoids = Vec::new();
    for (center, radius, metric) in balls {
        let isotropic = metric
            .first()
            .is_some_and(|q0| metric.iter().all(|q| q == q0));
        let merge = match &affine {
            Some(a) if isotropic && ellipsoids.is_empty() && !pieces_has_affine_ball(&pieces) => {
                let mut c = center.clone();
                a.project(&mut c)?;
                let scale = center.iter().fold(1.0f64, |s, v| s.max(v.abs()));
                c.iter()
                    .zip(&center)
                    .all(|(x, y)| (x - y).abs() <= 1e-10 * scale)
            }
            _ => false,
        };
        if merge {
            let q0 = metric[0];
            pieces.push(Piece::AffineBall {
                affine: affine.take().expect("checked above"),
                center,
                radius: radius / q0.sqrt(),
            });
        } else {
            ellipsoids.push(Piece::Ellipsoid {
                center,
                metric,
                radius,
            });
        }
    }
    if let Some(a) = affine {
        pieces.insert(0, Piece::Affine(a));
    }
    pieces.extend(ellipsoids);

    let mut merged_budget = false;
    for (subset, bound) in budgets {
        match &lower {
            Some(l) if !merged_budget && l.iter().all(|v| v.is_finite()) => {
                let floor: f64 = subset.iter().map(|&k| l[k]).sum();
                if floor > bound {
                    return Err(Error::Infeasible(format!(
                        "budget {bound} is below the lower bounds' total {floor}"
                    )));
                }
                merged_budget = true;
                pieces.push(Piece::LowerBudget {
                    lower: l.clone(),
                    subset,
                    bound,
                });
            }
            _ => pieces.push(Piece::Halfspace { subset, bound }),
        }
    }
    if let Some(l) = lower {
        if !merged_budget {
            pieces.push(Piece::Lower(l));
        } else if pieces.len() > 1 {
            // keep the exact orthant last so every Dykstra output is in it
            let pos = pieces
                .iter()
                .position(|p| matches!(p, Piece::LowerBudget { .. }))
                .expect("merged budget exists");
            let lb = pieces.remove(pos);
            pieces.push(lb);
        }
    }
    Ok(pieces)
}

fn pieces_has_affine_ball(pieces: &[Piece]) -> bool {
    pieces.iter().any(|p| matches!(p, Piece::AffineBall { .. }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant_clip() {
        let set = FeasibleSet::nonnegative(2);
        assert_eq!(set.project(&[-1.0, 2.0]).unwrap(), vec![0.0, 2.0]);
        let r = set.check_membership(&[-0.1, 1.0]);
        assert!((r.worst() - 0.1).abs() < 1e-15);
        assert_eq!(set.check_membership(&[0.0, 1.0]).worst(), 0.0);
    }

    #[test]
    fn budget_set_is_one_piece() {
        let set = FeasibleSet::budget(2, vec![0, 1], 1.0).unwrap();
        assert_eq!(set.piece_count(), 1);
        let z = set.project(&[0.5, 0.7]).unwrap();
        assert!((z[0] - 0.4).abs() < 1e-12 && (z[1] - 0.6).abs() < 1e-12);
    }

    fn toy_reference() -> DecisionVector {
        let mut b = DecisionLayout::builder(2);
        b.tied(&[(0, 1), (1, 0)]);
        DecisionVector::new(b.build().unwrap(), vec![1.0]).unwrap()
    }

    #[test]
    fn toy_frobenius_ball() {
        let reference = toy_reference();
        let set = FeasibleSet::with_initial(
            1,
            vec![
                Primitive::frobenius_fraction(&reference, 0.2).unwrap(),
                Primitive::NonNegative,
            ],
            ProjectionOptions::default(),
            &[1.0],
        )
        .unwrap();
        assert!((set.project(&[1.5]).unwrap()[0] - 1.2).abs() < 1e-9);
        assert!((set.project(&[0.5]).unwrap()[0] - 0.8).abs() < 1e-9);
    }

    #[test]
    fn toy_degree_constraint_pins_weight() {
        let reference = toy_reference();
        let set = FeasibleSet::new(
            1,
            vec![
                Primitive::degree_preserving(&reference),
                Primitive::NonNegative,
            ],
            ProjectionOptions::default(),
        )
        .unwrap();
        assert!((set.project(&[0.3]).unwrap()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degree_rows_count_slots() {
        let layout = DecisionLayout::complete_undirected(3).unwrap();
        let rows = degree_rows(&layout);
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.len() == 2));
    }

    #[test]
    fn degree_ball_and_orthant_form_one_piece() {
        let layout = DecisionLayout::complete_undirected(5).unwrap();
        let reference = DecisionVector::new(layout.clone(), vec![1.0; layout.len()]).unwrap();
        let set = FeasibleSet::new(
            layout.len(),
            vec![
                Primitive::degree_preserving(&reference),
                Primitive::frobenius_fraction(&reference, 0.2).unwrap(),
                Primitive::NonNegative,
            ],
            ProjectionOptions::default(),
        )
        .unwrap();
        assert_eq!(set.piece_count(), 1);
        let w: Vec<f64> = (0..layout.len())
            .map(|k| (k as f64 * 0.37).sin() * 2.0)
            .collect();
        let z = set.project(&w).unwrap();
        assert!(set.check_membership(&z).is_member(1e-8));
    }

    #[test]
    fn empty_intersection_is_reported() {
        let set = FeasibleSet::new(
            2,
            vec![
                Primitive::BoxLower(vec![1.0, 1.0]),
                Primitive::FrobeniusBall {
                    center: vec![0.0, 0.0],
                    radius: 0.5,
                    metric: vec![1.0, 1.0],
                },
            ],
            ProjectionOptions {
                tol: 1e-8,
                max_sweeps: 200,
            },
        )
        .unwrap();
        assert!(matches!(
            set.ensure_nonempty(&[0.0, 0.0]),
            Err(Error::Infeasible(_))
        ));
        assert!(FeasibleSet::new(
            2,
            vec![
                Primitive::BoxLower(vec![1.0, 1.0]),
                Primitive::budget(2, 1.0)
            ],
            ProjectionOptions::default()
        )
        .is_err());
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(FeasibleSet::new(
            2,
            vec![Primitive::BoxLower(vec![0.0])],
            ProjectionOptions::default()
        )
        .is_err());
        assert!(FeasibleSet::nonnegative(2).project(&[1.0]).is_err());
        assert!(FeasibleSet::nonnegative(1).project(&[f64::NAN]).is_err());
    }
}
