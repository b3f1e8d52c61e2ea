//! Upper-level objectives `phi(w, y)` with hand-derived partial gradients.
//!
//! Sums "over all i, j" run over the assembled network, so frozen slots
//! contribute to values and to `grad_y` but never to `grad_w`. A decision
//! variable that governs several slots receives the sum of their
//! contributions.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{DecisionLayout, DecisionVector, Topology};

/// Everything an objective may look at.
#[derive(Clone, Copy)]
pub struct EvalContext<'a> {
    pub decision: &'a DecisionVector,
    /// `W` assembled from `decision`.
    pub topology: &'a Topology,
    pub y: &'a [f64],
}

/// A continuously differentiable `phi(w, y)`.
///
/// The `add_*` methods accumulate `scale * gradient` into `out` so that
/// weighted sums compose without temporaries.
pub trait Objective: Send + Sync {
    fn name(&self) -> String;

    fn value(&self, ctx: &EvalContext<'_>) -> f64;

    /// `out += scale * nabla_1 phi`, one entry per decision variable.
    fn add_grad_w(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]);

    /// `out += scale * nabla_2 phi`, one entry per node.
    fn add_grad_y(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]);

    fn grad_w(&self, ctx: &EvalContext<'_>) -> Vec<f64> {
        let mut g = vec![0.0; ctx.decision.len()];
        self.add_grad_w(ctx, 1.0, &mut g);
        g
    }

    fn grad_y(&self, ctx: &EvalContext<'_>) -> Vec<f64> {
        let mut g = vec![0.0; ctx.y.len()];
        self.add_grad_y(ctx, 1.0, &mut g);
        g
    }
}

/// `(1/|N|) sum_{i in N} y_i^2`, over all nodes unless restricted.
#[derive(Clone, Debug, Default)]
pub struct PolarizationMeanSquare {
    nodes: Option<Vec<usize>>,
}

impl PolarizationMeanSquare {
    pub fn new() -> Self {
        Self::default()
    }

    /// Restricts the mean to `nodes` (e.g. users, excluding an added agency).
    pub fn over(nodes: Vec<usize>) -> Self {
        Self { nodes: Some(nodes) }
    }
}

impl Objective for PolarizationMeanSquare {
    fn name(&self) -> String {
        "polarization".into()
    }

    fn value(&self, ctx: &EvalContext<'_>) -> f64 {
        match &self.nodes {
            None => polarization_mean_square(ctx.y),
            Some(nodes) if nodes.is_empty() => 0.0,
            Some(nodes) => {
                nodes.iter().map(|&i| ctx.y[i] * ctx.y[i]).sum::<f64>() / nodes.len() as f64
            }
        }
    }

    fn add_grad_w(&self, _: &EvalContext<'_>, _: f64, _: &mut [f64]) {}

    fn add_grad_y(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]) {
        match &self.nodes {
            None => {
                let c = 2.0 * scale / ctx.y.len() as f64;
                for (o, yi) in out.iter_mut().zip(ctx.y) {
                    *o += c * yi;
                }
            }
            Some(nodes) if nodes.is_empty() => {}
            Some(nodes) => {
                let c = 2.0 * scale / nodes.len() as f64;
                for &i in nodes {
                    out[i] += c * ctx.y[i];
                }
            }
        }
    }
}

/// `(1/n) ||y||^2`.
pub fn polarization_mean_square(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64
}

/// `D = 1/2 sum_ij w_ij (y_i - y_j)^2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Disagreement;

impl Objective for Disagreement {
    fn name(&self) -> String {
        "disagreement".into()
    }

    fn value(&self, ctx: &EvalContext<'_>) -> f64 {
        disagreement(ctx.topology, ctx.y)
    }

    fn add_grad_w(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]) {
        let layout = ctx.decision.layout();
        let y = ctx.y;
        for (k, o) in out.iter_mut().enumerate() {
            let g: f64 = layout
                .slots(k)
                .iter()
                .map(|&(i, j)| 0.5 * (y[i] - y[j]) * (y[i] - y[j]))
                .sum();
            *o += scale * g;
        }
    }

    fn add_grad_y(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]) {
        let y = ctx.y;
        for (i, j, w) in ctx.topology.entries() {
            let d = scale * w * (y[i] - y[j]);
            out[i] += d;
            out[j] -= d;
        }
    }
}

pub fn disagreement(topology: &Topology, y: &[f64]) -> f64 {
    0.5 * topology
        .entries()
        .map(|(i, j, w)| w * (y[i] - y[j]) * (y[i] - y[j]))
        .sum::<f64>()
}

/// `P = sum_i (y_i - mean(y))^2`, recomputing the mean from `y`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PolarizationVariance;

impl Objective for PolarizationVariance {
    fn name(&self) -> String {
        "polarization-variance".into()
    }

    fn value(&self, ctx: &EvalContext<'_>) -> f64 {
        polarization_variance(ctx.y)
    }

    fn add_grad_w(&self, _: &EvalContext<'_>, _: f64, _: &mut [f64]) {}

    fn add_grad_y(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]) {
        let mean = mean(ctx.y);
        for (o, yi) in out.iter_mut().zip(ctx.y) {
            *o += 2.0 * scale * (yi - mean);
        }
    }
}

fn mean(y: &[f64]) -> f64 {
    if y.is_empty() {
        0.0
    } else {
        y.iter().sum::<f64>() / y.len() as f64
    }
}

pub fn polarization_variance(y: &[f64]) -> f64 {
    let m = mean(y);
    y.iter().map(|v| (v - m) * (v - m)).sum()
}

/// `lambda * sum w_ij^2` over the decision-governed slots.
#[derive(Clone, Copy, Debug)]
pub struct FrobeniusRegularizer {
    pub lambda: f64,
}

impl FrobeniusRegularizer {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "regularization weight must be >= 0, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }
}

impl Objective for FrobeniusRegularizer {
    fn name(&self) -> String {
        format!("frobenius({})", self.lambda)
    }

    fn value(&self, ctx: &EvalContext<'_>) -> f64 {
        let layout = ctx.decision.layout();
        self.lambda
            * ctx
                .decision
                .values()
                .iter()
                .enumerate()
                .map(|(k, w)| layout.multiplicity(k) as f64 * w * w)
                .sum::<f64>()
    }

    fn add_grad_w(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]) {
        let layout = ctx.decision.layout();
        for (k, (o, w)) in out.iter_mut().zip(ctx.decision.values()).enumerate() {
            *o += scale * 2.0 * self.lambda * layout.multiplicity(k) as f64 * w;
        }
    }

    fn add_grad_y(&self, _: &EvalContext<'_>, _: f64, _: &mut [f64]) {}
}

/// `sum_t c_t phi_t`.
#[derive(Default)]
pub struct WeightedSum {
    terms: Vec<(f64, Box<dyn Objective>)>,
}

impl WeightedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, weight: f64, objective: impl Objective + 'static) -> Self {
        self.terms.push((weight, Box::new(objective)));
        self
    }

    pub fn push(&mut self, weight: f64, objective: Box<dyn Objective>) {
        self.terms.push((weight, objective));
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

impl Objective for WeightedSum {
    fn name(&self) -> String {
        self.terms
            .iter()
            .map(|(c, o)| format!("{c}*{}", o.name()))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    fn value(&self, ctx: &EvalContext<'_>) -> f64 {
        self.terms.iter().map(|(c, o)| c * o.value(ctx)).sum()
    }

    fn add_grad_w(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]) {
        for (c, o) in &self.terms {
            o.add_grad_w(ctx, scale * c, out);
        }
    }

    fn add_grad_y(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]) {
        for (c, o) in &self.terms {
            o.add_grad_y(ctx, scale * c, out);
        }
    }
}

type ValueFn = dyn Fn(&EvalContext<'_>) -> f64 + Send + Sync;
type GradFn = dyn Fn(&EvalContext<'_>) -> Vec<f64> + Send + Sync;

/// Objective assembled from closures, for user-defined `phi`.
pub struct FnObjective {
    name: String,
    value: Box<ValueFn>,
    grad_w: Box<GradFn>,
    grad_y: Box<GradFn>,
}

impl FnObjective {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&EvalContext<'_>) -> f64 + Send + Sync + 'static,
        grad_w: impl Fn(&EvalContext<'_>) -> Vec<f64> + Send + Sync + 'static,
        grad_y: impl Fn(&EvalContext<'_>) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Box::new(value),
            grad_w: Box::new(grad_w),
            grad_y: Box::new(grad_y),
        }
    }
}

impl Objective for FnObjective {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn value(&self, ctx: &EvalContext<'_>) -> f64 {
        (self.value)(ctx)
    }
    fn add_grad_w(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]) {
        for (o, g) in out.iter_mut().zip((self.grad_w)(ctx)) {
            *o += scale * g;
        }
    }
    fn add_grad_y(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]) {
        for (o, g) in out.iter_mut().zip((self.grad_y)(ctx)) {
            *o += scale * g;
        }
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn value(&self, ctx: &EvalContext<'_>) -> f64 {
        (**self).value(ctx)
    }
    fn add_grad_w(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]) {
        (**self).add_grad_w(ctx, scale, out)
    }
    fn add_grad_y(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]) {
        (**self).add_grad_y(ctx, scale, out)
    }
}

impl<T: Objective + ?Sized> Objective for Arc<T> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn value(&self, ctx: &EvalContext<'_>) -> f64 {
        (**self).value(ctx)
    }
    fn add_grad_w(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]) {
        (**self).add_grad_w(ctx, scale, out)
    }
    fn add_grad_y(&self, ctx: &EvalContext<'_>, scale: f64, out: &mut [f64]) {
        (**self).add_grad_y(ctx, scale, out)
    }
}

/// Worst per-coordinate disagreement between analytic gradients and
/// central differences.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradCheck {
    pub max_rel_err_w: f64,
    pub max_rel_err_y: f64,
    pub checked_w: usize,
    pub checked_y: usize,
}

impl GradCheck {
    pub fn worst(&self) -> f64 {
        self.max_rel_err_w.max(self.max_rel_err_y)
    }
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        return 0.0;
    }
    d / a.abs().max(b.abs()).max(floor)
}

/// Compares `grad_w` and `grad_y` against central differences of `value`
/// with step `h`, holding the other argument fixed.
///
/// With `sample = Some(k)` only `k` random coordinates of each argument are
/// probed. Coordinates whose gradient is tiny compared to the largest one
/// are measured against `1e-3 * max|g|` instead of their own magnitude.
/// Decision values closer to zero than `h` are differenced one-sidedly so
/// the perturbed weights stay non-negative.
pub fn check_gradients(
    objective: &dyn Objective,
    decision: &DecisionVector,
    y: &[f64],
    h: f64,
    sample: Option<(usize, u64)>,
) -> Result<GradCheck> {
    let topology = decision.assemble()?;
    let ctx = EvalContext {
        decision,
        topology: &topology,
        y,
    };
    let gw = objective.grad_w(&ctx);
    let gy = objective.grad_y(&ctx);
    let m = decision.len();
    let n = y.len();
    let (w_idx, y_idx) = match sample {
        None => ((0..m).collect::<Vec<_>>(), (0..n).collect::<Vec<_>>()),
        Some((k, seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (
                index::sample(&mut rng, m, k.min(m)).into_vec(),
                index::sample(&mut rng, n, k.min(n)).into_vec(),
            )
        }
    };

    let mut report = GradCheck {
        checked_w: w_idx.len(),
        checked_y: y_idx.len(),
        ..Default::default()
    };

    let floor_w = 1e-3 * gw.iter().fold(0.0f64, |a, g| a.max(g.abs())) + 1e-12;
    let mut probe = decision.clone();
    let mut values = decision.values().to_vec();
    let mut topo = topology.clone();
    let mut eval_w = |values: &[f64]| -> Result<f64> {
        probe.set_values(values);
        probe.assemble_into(&mut topo)?;
        Ok(objective.value(&EvalContext {
            decision: &probe,
            topology: &topo,
            y,
        }))
    };
    for &k in &w_idx {
        let w0 = values[k];
        let fd = if w0 >= h {
            values[k] = w0 + h;
            let up = eval_w(&values)?;
            values[k] = w0 - h;
            let down = eval_w(&values)?;
            (up - down) / (2.0 * h)
        } else {
            values[k] = w0 + 2.0 * h;
            let up2 = eval_w(&values)?;
            values[k] = w0 + h;
            let up = eval_w(&values)?;
            values[k] = w0;
            let base = eval_w(&values)?;
            (-up2 + 4.0 * up - 3.0 * base) / (2.0 * h)
        };
        values[k] = w0;
        report.max_rel_err_w = report.max_rel_err_w.max(relative_error(gw[k], fd, floor_w));
    }

    let floor_y = 1e-3 * gy.iter().fold(0.0f64, |a, g| a.max(g.abs())) + 1e-12;
    let mut yy = y.to_vec();
    for &i in &y_idx {
        let y0 = yy[i];
        yy[i] = y0 + h;
        let up = objective.value(&EvalContext {
            decision,
            topology: &topology,
            y: &yy,
        });
        yy[i] = y0 - h;
        let down = objective.value(&EvalContext {
            decision,
            topology: &topology,
            y: &yy,
        });
        yy[i] = y0;
        let fd = (up - down) / (2.0 * h);
        report.max_rel_err_y = report.max_rel_err_y.max(relative_error(gy[i], fd, floor_y));
    }
    Ok(report)
}

/// Parameters handed to registered objective factories.
#[derive(Clone, Debug, Default)]
pub struct ObjectiveParams {
    /// Regularization weight for `frobenius`.
    pub lambda: f64,
    /// Node subset for `polarization`; all nodes when `None`.
    pub nodes: Option<Vec<usize>>,
}

type Factory = Box<dyn Fn(&ObjectiveParams) -> Result<Box<dyn Objective>> + Send + Sync>;

/// Objectives selectable by name.
///
/// Every factory is gradient-checked on a small probe instance when it is
/// registered; a factory whose gradients disagree with finite differences by
/// more than `1e-5` is refused.
pub struct ObjectiveRegistry {
    factories: BTreeMap<String, Factory>,
}

pub const REGISTRATION_TOLERANCE: f64 = 1e-5;

impl Default for ObjectiveRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl ObjectiveRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("polarization", |p| {
            Ok(Box::new(match &p.nodes {
                Some(nodes) => PolarizationMeanSquare::over(nodes.clone()),
                None => PolarizationMeanSquare::new(),
            }))
        })
        .expect("builtin passes gradient check");
        r.register("disagreement", |_| Ok(Box::new(Disagreement)))
            .expect("builtin passes gradient check");
        r.register("polarization-variance", |_| {
            Ok(Box::new(PolarizationVariance))
        })
        .expect("builtin passes gradient check");
        r.register("frobenius", |p| {
            Ok(Box::new(FrobeniusRegularizer::new(p.lambda)?))
        })
        .expect("builtin passes gradient check");
        r
    }

    pub fn register<F>(&mut self, name: &str, factory: F) -> Result<()>
    where
        F: Fn(&ObjectiveParams) -> Result<Box<dyn Objective>> + Send + Sync + 'static,
    {
        let probe = factory(&ObjectiveParams {
            lambda: 0.5,
            nodes: None,
        })?;
        let (decision, y) = probe_instance();
        let check = check_gradients(probe.as_ref(), &decision, &y, 1e-6, None)?;
        if check.worst() > REGISTRATION_TOLERANCE {
            return Err(Error::GradientCheck {
                name: name.to_owned(),
                error: check.worst(),
            });
        }
        self.factories.insert(name.to_owned(), Box::new(factory));
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, params: &ObjectiveParams) -> Result<Box<dyn Objective>> {
        let factory = self.factories.get(name).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown objective `{name}` (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        factory(params)
    }

    /// Weighted sum of named objectives.
    pub fn build_sum(
        &self,
        terms: &[(String, f64)],
        params: &ObjectiveParams,
    ) -> Result<Box<dyn Objective>> {
        if terms.len() == 1 && terms[0].1 == 1.0 {
            return self.build(&terms[0].0, params);
        }
        let mut sum = WeightedSum::new();
        for (name, weight) in terms {
            sum.push(*weight, self.build(name, params)?);
        }
        Ok(Box::new(sum))
    }
}

/// Six users, a mix of free, tied and frozen slots, generic opinions.
fn probe_instance() -> (DecisionVector, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let n = 6;
    let mut b = DecisionLayout::builder(n);
    b.tied(&[(0, 1), (1, 0)]);
    b.tied(&[(2, 4), (4, 2)]);
    for &(i, j) in &[(0, 2), (1, 3), (3, 5), (5, 0), (4, 1), (2, 5)] {
        b.variable(i, j);
    }
    b.frozen(3, 4, 0.7).frozen(5, 2, 1.3);
    let layout = b.build().expect("probe layout is valid");
    let values = (0..layout.len())
        .map(|_| rng.random_range(0.2..1.5))
        .collect();
    let decision = DecisionVector::new(layout, values).expect("probe values are valid");
    let y = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (decision, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (DecisionVector, Topology) {
        let mut b = DecisionLayout::builder(2);
        b.tied(&[(0, 1), (1, 0)]);
        let d = DecisionVector::new(b.build().unwrap(), vec![1.0]).unwrap();
        let t = d.assemble().unwrap();
        (d, t)
    }

    fn ctx<'a>(d: &'a DecisionVector, t: &'a Topology, y: &'a [f64]) -> EvalContext<'a> {
        EvalContext {
            decision: d,
            topology: t,
            y,
        }
    }

    #[test]
    fn mean_square_polarization() {
        let (d, t) = toy();
        let y = [1.0, -1.0];
        let c = ctx(&d, &t, &y);
        let p = PolarizationMeanSquare::new();
        assert_eq!(p.value(&c), 1.0);
        assert_eq!(p.grad_y(&c), vec![1.0, -1.0]);
        assert_eq!(p.grad_w(&c), vec![0.0]);
        assert_eq!(p.value(&ctx(&d, &t, &[0.0, 0.0])), 0.0);
    }

    #[test]
    fn toy_disagreement_is_one_ninth() {
        let (d, t) = toy();
        let y = [2.0 / 3.0, 1.0 / 3.0];
        let c = ctx(&d, &t, &y);
        assert!((Disagreement.value(&c) - 1.0 / 9.0).abs() < 1e-15);
        // both directed slots: 2 * 1/2 * (1/3)^2
        assert!((Disagreement.grad_w(&c)[0] - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn consensus_has_no_disagreement() {
        let (d, t) = toy();
        let y = [0.4, 0.4];
        let c = ctx(&d, &t, &y);
        assert_eq!(Disagreement.value(&c), 0.0);
        assert_eq!(Disagreement.grad_y(&c), vec![0.0, 0.0]);
    }

    #[test]
    fn variance_polarization() {
        let (d, t) = toy();
        let y = [1.0, -1.0];
        let c = ctx(&d, &t, &y);
        assert_eq!(PolarizationVariance.value(&c), 2.0);
        assert_eq!(PolarizationVariance.grad_y(&c), vec![2.0, -2.0]);
        assert_eq!(PolarizationVariance.value(&ctx(&d, &t, &[0.3, 0.3])), 0.0);
    }

    #[test]
    fn frobenius_regularizer() {
        let layout =
            DecisionLayout::existing_edges(&Topology::from_edges(2, [(0, 1, 2.0)]).unwrap())
                .unwrap();
        let d = DecisionVector::new(layout, vec![2.0]).unwrap();
        let t = d.assemble().unwrap();
        let y = [0.0, 0.0];
        let c = ctx(&d, &t, &y);
        let r = FrobeniusRegularizer::new(0.5).unwrap();
        assert_eq!(r.value(&c), 2.0);
        assert_eq!(r.grad_w(&c), vec![2.0]);
        let zero = FrobeniusRegularizer::new(0.0).unwrap();
        assert_eq!(zero.value(&c), 0.0);
        assert_eq!(zero.grad_w(&c), vec![0.0]);
        assert!(FrobeniusRegularizer::new(-1.0).is_err());
    }

    #[test]
    fn weighted_sum_adds_parts() {
        let (d, t) = toy();
        let y = [2.0 / 3.0, 1.0 / 3.0];
        let c = ctx(&d, &t, &y);
        let reg = FrobeniusRegularizer::new(0.2).unwrap();
        let sum = WeightedSum::new().term(1.0, Disagreement).term(1.0, reg);
        assert!((sum.value(&c) - (Disagreement.value(&c) + reg.value(&c))).abs() < 1e-15);
        let g = sum.grad_w(&c);
        assert!((g[0] - (Disagreement.grad_w(&c)[0] + reg.grad_w(&c)[0])).abs() < 1e-15);
    }

    #[test]
    fn builtins_pass_gradient_check_on_random_inputs() {
        let registry = ObjectiveRegistry::with_builtins();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 10;
            let layout = DecisionLayout::complete_undirected(n).unwrap();
            let values = (0..layout.len())
                .map(|_| rng.random_range(0.0..2.0))
                .collect();
            let d = DecisionVector::new(layout, values).unwrap();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            for name in registry.names() {
                let obj = registry
                    .build(
                        name,
                        &ObjectiveParams {
                            lambda: 0.3,
                            nodes: None,
                        },
                    )
                    .unwrap();
                let check = check_gradients(obj.as_ref(), &d, &y, 1e-6, None).unwrap();
                assert!(check.worst() <= 1e-5, "{name}: {check:?}");
            }
        }
    }

    #[test]
    fn polarization_gradient_at_n50() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let n = 50;
        let layout = DecisionLayout::builder(n).build().unwrap();
        let d = DecisionVector::zeros(layout);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for obj in [
            &PolarizationMeanSquare::new() as &dyn Objective,
            &PolarizationVariance,
        ] {
            let check = check_gradients(obj, &d, &y, 1e-6, None).unwrap();
            assert!(check.max_rel_err_y <= 1e-6, "{}: {check:?}", obj.name());
        }
    }

    #[test]
    fn registry_refuses_inconsistent_objective() {
        let mut r = ObjectiveRegistry::empty();
        let bad = r.register("bad", |_| {
            Ok(Box::new(FnObjective::new(
                "bad",
                |c| c.y.iter().map(|v| v * v).sum(),
                |c| vec![0.0; c.decision.len()],
                |c| c.y.to_vec(), // should be 2y
            )))
        });
        assert!(matches!(bad, Err(Error::GradientCheck { .. })));
        let good = r.register("good", |_| {
            Ok(Box::new(FnObjective::new(
                "good",
                |c| c.y.iter().map(|v| v * v).sum(),
                |c| vec![0.0; c.decision.len()],
                |c| c.y.iter().map(|v| 2.0 * v).collect(),
            )))
        });
        assert!(good.is_ok());
        assert!(r.build("good", &ObjectiveParams::default()).is_ok());
        assert!(r.build("missing", &ObjectiveParams::default()).is_err());
    }
}
