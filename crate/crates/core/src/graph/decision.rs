use std::collections::HashSet;
use std::sync::Arc;

use super::topology::{check_slot, check_weight, Topology};
use crate::error::{Error, Result};

/// Who controls an adjacency slot `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotOwner {
    /// The slot takes the value of decision variable `k`.
    Decision(usize),
    /// The slot is held at a constant (stored in the layout pattern).
    Frozen,
}

/// Mapping between the decision vector `w` in `R^m` and the adjacency slots.
///
/// Each decision index governs one or more slots; groups with several slots
/// encode tied weights such as `w_ij = w_ji` for undirected networks. Slots
/// that are not governed by a decision index are frozen. Frozen slots with
/// a non-zero constant are stored in the pattern; all other slots are zero.
#[derive(Debug)]
pub struct DecisionLayout {
    n: usize,
    group_ptr: Vec<usize>,
    group_slots: Vec<(usize, usize)>,
    group_pos: Vec<usize>,
    pattern: Topology,
    owner: Vec<SlotOwner>,
    frozen_row_sums: Vec<f64>,
}

impl DecisionLayout {
    pub fn builder(n: usize) -> LayoutBuilder {
        LayoutBuilder {
            n,
            groups: Vec::new(),
            frozen: Vec::new(),
            freeze_rest: None,
        }
    }

    /// One decision variable per stored entry of `topology`.
    pub fn existing_edges(topology: &Topology) -> Result<Arc<Self>> {
        let mut b = Self::builder(topology.n());
        for (i, j, _) in topology.entries() {
            b.variable(i, j);
        }
        b.build()
    }

    /// Decision variables `w_{i,col}` for every `i != col`; every other slot
    /// is frozen to its value in `base`.
    pub fn column(base: &Topology, col: usize) -> Result<Arc<Self>> {
        let n = base.n();
        if col >= n {
            return Err(Error::IndexOutOfRange {
                what: "node",
                index: col,
                size: n,
            });
        }
        let mut b = Self::builder(n);
        for i in (0..n).filter(|&i| i != col) {
            b.variable(i, col);
        }
        b.freeze_remaining(base);
        b.build()
    }

    /// One tied variable `{(i, j), (j, i)}` for every unordered pair.
    pub fn complete_undirected(n: usize) -> Result<Arc<Self>> {
        let mut b = Self::builder(n);
        for i in 0..n {
            for j in i + 1..n {
                b.tied(&[(i, j), (j, i)]);
            }
        }
        b.build()
    }

    /// One variable for every ordered pair `i != j`.
    pub fn complete_directed(n: usize) -> Result<Arc<Self>> {
        let mut b = Self::builder(n);
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                b.variable(i, j);
            }
        }
        b.build()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of decision variables `m`.
    pub fn len(&self) -> usize {
        self.group_ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slots governed by decision variable `k`.
    pub fn slots(&self, k: usize) -> &[(usize, usize)] {
        &self.group_slots[self.group_ptr[k]..self.group_ptr[k + 1]]
    }

    /// Number of slots governed by decision variable `k`.
    pub fn multiplicity(&self, k: usize) -> usize {
        self.group_ptr[k + 1] - self.group_ptr[k]
    }

    pub fn multiplicities(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.multiplicity(k) as f64)
            .collect()
    }

    /// Owner of slot `(i, j)`; slots outside the pattern are frozen at zero.
    pub fn owner(&self, i: usize, j: usize) -> SlotOwner {
        self.pattern
            .position(i, j)
            .map_or(SlotOwner::Frozen, |p| self.owner[p])
    }

    /// Shared sparsity pattern with frozen constants filled in and zeros in
    /// the decision slots.
    pub fn pattern(&self) -> &Topology {
        &self.pattern
    }

    /// Row sums of the frozen part of `W`.
    pub fn frozen_row_sums(&self) -> &[f64] {
        &self.frozen_row_sums
    }

    /// Flat `(slot, decision index)` pairs in decision order.
    pub fn governed_slots(&self) -> impl Iterator<Item = ((usize, usize), usize)> + '_ {
        (0..self.len()).flat_map(move |k| self.slots(k).iter().map(move |&s| (s, k)))
    }

    pub(crate) fn group_positions(&self, k: usize) -> &[usize] {
        &self.group_pos[self.group_ptr[k]..self.group_ptr[k + 1]]
    }
}

/// Incremental construction of a [`DecisionLayout`].
pub struct LayoutBuilder {
    n: usize,
    groups: Vec<Vec<(usize, usize)>>,
    frozen: Vec<(usize, usize, f64)>,
    freeze_rest: Option<Topology>,
}

impl LayoutBuilder {
    /// Adds an untied decision variable for slot `(i, j)`; returns its index.
    pub fn variable(&mut self, i: usize, j: usize) -> usize {
        self.groups.push(vec![(i, j)]);
        self.groups.len() - 1
    }

    /// Adds one decision variable governing all `slots`; returns its index.
    pub fn tied(&mut self, slots: &[(usize, usize)]) -> usize {
        self.groups.push(slots.to_vec());
        self.groups.len() - 1
    }

    /// Holds slot `(i, j)` at weight `w`.
    pub fn frozen(&mut self, i: usize, j: usize, w: f64) -> &mut Self {
        self.frozen.push((i, j, w));
        self
    }

    /// Freezes every entry of `base` that no decision variable governs.
    pub fn freeze_remaining(&mut self, base: &Topology) -> &mut Self {
        self.freeze_rest = Some(base.clone());
        self
    }

    pub fn build(self) -> Result<Arc<DecisionLayout>> {
        let n = self.n;
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut triples: Vec<(usize, usize, f64)> = Vec::new();

        for (k, group) in self.groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "decision variable {k} governs no slot"
                )));
            }
            for &(i, j) in group {
                check_slot(n, i, j, &format!("decision variable {k}"))?;
                if !seen.insert((i, j)) {
                    return Err(Error::DuplicateSlot(i, j));
                }
                triples.push((i, j, 0.0));
            }
        }
        if self.groups.len() > n * n.saturating_sub(1) {
            return Err(Error::InvalidConfig(
                "more decision variables than off-diagonal slots".into(),
            ));
        }

        for &(i, j, w) in &self.frozen {
            let location = format!("frozen slot ({i}, {j})");
            check_slot(n, i, j, &location)?;
            check_weight(w, &location)?;
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateSlot(i, j));
            }
            if w != 0.0 {
                triples.push((i, j, w));
            }
        }
        if let Some(base) = &self.freeze_rest {
            if base.n() != n {
                return Err(Error::DimensionMismatch {
                    what: "base topology",
                    expected: n,
                    actual: base.n(),
                });
            }
            for (i, j, w) in base.entries() {
                if seen.insert((i, j)) && w != 0.0 {
                    triples.push((i, j, w));
                }
            }
        }

        let pattern = Topology::from_checked_triples(n, triples);
        let mut owner = vec![SlotOwner::Frozen; pattern.nnz()];
        let mut group_ptr = Vec::with_capacity(self.groups.len() + 1);
        let mut group_slots = Vec::new();
        let mut group_pos = Vec::new();
        group_ptr.push(0);
        for (k, group) in self.groups.iter().enumerate() {
            for &(i, j) in group {
                let p = pattern
                    .position(i, j)
                    .expect("decision slot present in pattern");
                owner[p] = SlotOwner::Decision(k);
                group_slots.push((i, j));
                group_pos.push(p);
            }
            group_ptr.push(group_slots.len());
        }
        let mut frozen_row_sums = vec![0.0; n];
        for i in 0..n {
            let start = pattern.row_ptr()[i];
            frozen_row_sums[i] = pattern
                .row_weights(i)
                .iter()
                .enumerate()
                .filter(|(off, _)| owner[start + off] == SlotOwner::Frozen)
                .map(|(_, w)| w)
                .sum();
        }

        Ok(Arc::new(DecisionLayout {
            n,
            group_ptr,
            group_slots,
            group_pos,
            pattern,
            owner,
            frozen_row_sums,
        }))
    }
}

/// Free weights `w` together with the layout that maps them onto `W`.
#[derive(Clone, Debug)]
pub struct DecisionVector {
    layout: Arc<DecisionLayout>,
    values: Vec<f64>,
}

impl DecisionVector {
    pub fn new(layout: Arc<DecisionLayout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                what: "decision vector",
                expected: layout.len(),
                actual: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("decision variable {k}"),
            });
        }
        Ok(Self { layout, values })
    }

    pub fn zeros(layout: Arc<DecisionLayout>) -> Self {
        let m = layout.len();
        Self {
            layout,
            values: vec![0.0; m],
        }
    }

    /// Reads each variable from `base`; tied groups take the mean of their
    /// slots.
    pub fn from_topology(layout: Arc<DecisionLayout>, base: &Topology) -> Result<Self> {
        if base.n() != layout.n() {
            return Err(Error::DimensionMismatch {
                what: "base topology",
                expected: layout.n(),
                actual: base.n(),
            });
        }
        let values = (0..layout.len())
            .map(|k| {
                let slots = layout.slots(k);
                slots.iter().map(|&(i, j)| base.weight(i, j)).sum::<f64>() / slots.len() as f64
            })
            .collect();
        Ok(Self { layout, values })
    }

    pub fn layout(&self) -> &Arc<DecisionLayout> {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Replaces the values, keeping the layout.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(Arc::clone(&self.layout), values)
    }

    pub fn set_values(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.values.len(), "decision length");
        self.values.copy_from_slice(values);
    }

    pub fn assemble(&self) -> Result<Topology> {
        assemble_weights(self)
    }

    /// Writes the current weights into `topology`, which must share this
    /// layout's pattern (e.g. a previous result of [`assemble`](Self::assemble)).
    pub fn assemble_into(&self, topology: &mut Topology) -> Result<()> {
        if !topology.shares_pattern(self.layout.pattern()) {
            *topology = self.assemble()?;
            return Ok(());
        }
        check_nonnegative(&self.values)?;
        let weights = topology.weights_mut();
        weights.copy_from_slice(self.layout.pattern().weights());
        for (k, &v) in self.values.iter().enumerate() {
            for &p in self.layout.group_positions(k) {
                weights[p] = v;
            }
        }
        Ok(())
    }
}

fn check_nonnegative(values: &[f64]) -> Result<()> {
    if let Some((k, &v)) = values.iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(Error::NegativeWeight {
            value: v,
            location: format!("decision variable {k}"),
        });
    }
    Ok(())
}

/// Materializes `W` from decision values and frozen slots.
///
/// Mapped slots take their decision value (tied groups produce identical
/// entries), frozen slots keep their constant, everything else is zero.
pub fn assemble_weights(decision: &DecisionVector) -> Result<Topology> {
    check_nonnegative(decision.values())?;
    let layout = decision.layout();
    let pattern = layout.pattern();
    let mut weights = pattern.weights().to_vec();
    for (k, &v) in decision.values().iter().enumerate() {
        for &p in layout.group_positions(k) {
            weights[p] = v;
        }
    }
    Ok(pattern.with_weights(weights))
}
