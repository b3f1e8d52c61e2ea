use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Directed weighted network in compressed sparse row form.
///
/// Row `i` lists the heads `j` that tail `i` listens to, with weight `w_ij`.
/// Stored weights are finite and non-negative, and the diagonal is never
/// stored. Entries with weight zero may be present when the sparsity pattern
/// is shared with a [`DecisionLayout`](super::DecisionLayout).
///
/// The row-pointer and column arrays are reference counted so that repeated
/// assembly over a fixed pattern only touches the weight array.
#[derive(Clone, Debug)]
pub struct Topology {
    n: usize,
    row_ptr: Arc<[usize]>,
    col_idx: Arc<[usize]>,
    weights: Vec<f64>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.row_ptr[..] == other.row_ptr[..]
            && self.col_idx[..] == other.col_idx[..]
            && self.weights == other.weights
    }
}

impl Topology {
    /// Network with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0; n + 1].into(),
            col_idx: Vec::new().into(),
            weights: Vec::new(),
        }
    }

    /// Builds a network from `(tail, head, weight)` triples.
    ///
    /// Duplicate slots are summed. Self-loops, out-of-range indices and
    /// negative or non-finite weights are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut triples: Vec<(usize, usize, f64)> = Vec::new();
        for (k, (i, j, w)) in edges.into_iter().enumerate() {
            let location = format!("edge #{k} ({i}, {j})");
            check_slot(n, i, j, &location)?;
            check_weight(w, &location)?;
            triples.push((i, j, w));
        }
        Ok(Self::from_checked_triples(n, triples))
    }

    pub(crate) fn from_checked_triples(n: usize, mut triples: Vec<(usize, usize, f64)>) -> Self {
        triples.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triples.len());
        let mut weights: Vec<f64> = Vec::with_capacity(triples.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, w) in triples {
            if last == Some((i, j)) {
                *weights.last_mut().expect("duplicate follows an entry") += w;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            weights.push(w);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr: row_ptr.into(),
            col_idx: col_idx.into(),
            weights,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries, including explicit zeros.
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Number of edges in the graph sense, i.e. entries with `w_ij > 0`.
    pub fn edge_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Same pattern, new values.
    pub(crate) fn with_weights(&self, weights: Vec<f64>) -> Topology {
        assert_eq!(weights.len(), self.nnz(), "weights length");
        Topology {
            n: self.n,
            row_ptr: Arc::clone(&self.row_ptr),
            col_idx: Arc::clone(&self.col_idx),
            weights,
        }
    }

    pub(crate) fn shares_pattern(&self, other: &Topology) -> bool {
        Arc::ptr_eq(&self.row_ptr, &other.row_ptr) && Arc::ptr_eq(&self.col_idx, &other.col_idx)
    }

    pub fn row_cols(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row_weights(&self, i: usize) -> &[f64] {
        &self.weights[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row_cols(i)
            .iter()
            .copied()
            .zip(self.row_weights(i).iter().copied())
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row_weights(i).iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row_sum(i)).collect()
    }

    /// Position of slot `(i, j)` in the value array, if stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n {
            return None;
        }
        let start = self.row_ptr[i];
        self.row_cols(i).binary_search(&j).ok().map(|p| start + p)
    }

    /// `w_ij`, zero when the slot is not stored.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.weights[p])
    }

    /// All stored entries as `(tail, head, weight)`, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, w)| (i, j, w)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// `out = W x`.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = self.row(i).map(|(j, w)| w * x[j]).sum();
        }
    }

    /// `out = W^T x`, traversing rows and scattering into columns.
    pub fn mul_transpose_vec(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.n {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (j, w) in self.row(i) {
                out[j] += w * xi;
            }
        }
    }

    /// Keeps nodes `0..n_keep` and drops every entry with an endpoint beyond.
    pub fn truncated(&self, n_keep: usize) -> Topology {
        let n_keep = n_keep.min(self.n);
        let triples = self
            .entries()
            .filter(|&(i, j, _)| i < n_keep && j < n_keep)
            .collect();
        Self::from_checked_triples(n_keep, triples)
    }

    /// Same entries with `extra` isolated nodes appended.
    pub fn with_extra_nodes(&self, extra: usize) -> Topology {
        Self::from_checked_triples(self.n + extra, self.entries().collect())
    }

    /// True when `w_ij = w_ji` for every stored entry, to `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.entries()
            .all(|(i, j, w)| (w - self.weight(j, i)).abs() <= tol)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, w) in self.entries() {
            m[(i, j)] = w;
        }
        m
    }
}

pub(crate) fn check_slot(n: usize, i: usize, j: usize, location: &str) -> Result<()> {
    if i >= n {
        return Err(Error::IndexOutOfRange {
            what: "node",
            index: i,
            size: n,
        });
    }
    if j >= n {
        return Err(Error::IndexOutOfRange {
            what: "node",
            index: j,
            size: n,
        });
    }
    if i == j {
        return Err(Error::SelfLoop {
            node: i,
            location: location.to_owned(),
        });
    }
    Ok(())
}

pub(crate) fn check_weight(w: f64, location: &str) -> Result<()> {
    if !w.is_finite() {
        return Err(Error::NonFinite {
            location: location.to_owned(),
        });
    }
    if w < 0.0 {
        return Err(Error::NegativeWeight {
            value: w,
            location: location.to_owned(),
        });
    }
    Ok(())
}
