//! Run outputs: CSV tables plus a JSON summary per run, and the intervention
//! scatter data.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fjnet::{DecisionLayout, SolveReport};
use serde::Serialize;

/// Directory receiving the files of one run.
#[derive(Clone, Debug)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `header` and then one record per row; the header is written
    /// even when `rows` is empty.
    pub fn write_csv<S: Serialize>(
        &self,
        name: &str,
        header: &[&str],
        rows: &[S],
    ) -> Result<PathBuf> {
        let path = self.path(name);
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(path)
    }

    /// Pretty-printed JSON; non-finite numbers become `null`.
    pub fn write_json<S: Serialize>(&self, name: &str, value: &S) -> Result<PathBuf> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// `phi` and `zeta` per iteration of a report.
    pub fn write_trace(&self, name: &str, report: &SolveReport) -> Result<PathBuf> {
        let rows: Vec<TraceRow> = report
            .phi
            .iter()
            .enumerate()
            .map(|(k, &phi)| TraceRow {
                iteration: k,
                phi,
                zeta: if k == 0 {
                    None
                } else {
                    report.zeta.get(k - 1).copied()
                },
            })
            .collect();
        self.write_csv(name, TraceRow::HEADER, &rows)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub phi: f64,
    pub zeta: Option<f64>,
}

impl TraceRow {
    pub const HEADER: &'static [&'static str] = &["iteration", "phi", "zeta"];
}

/// One decision variable's weight change against the opinions at its first
/// slot before the intervention. A tied undirected variable stands for both
/// directions (`slots = 2`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScatterRow {
    pub tail: usize,
    pub head: usize,
    pub y_tail: f64,
    pub y_head: f64,
    pub delta: f64,
    pub slots: usize,
}

/// Sign statistics of a scatter relative to the mean opinion `y_bar`: an
/// edge is cross-camp when its endpoints lie on opposite sides of `y_bar`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CampStatistics {
    /// Total weight change on cross-camp slots.
    pub cross_delta: f64,
    /// Total weight change on same-side slots.
    pub within_delta: f64,
    pub cross_rows: usize,
    pub within_rows: usize,
    /// Fraction of changed cross-camp rows whose weight increased.
    pub cross_increase_fraction: f64,
    /// Fraction of changed same-side rows whose weight increased.
    pub within_increase_fraction: f64,
}

/// Scatter rows ordered by increasing `|delta|`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InterventionScatter {
    pub rows: Vec<ScatterRow>,
}

impl InterventionScatter {
    pub const HEADER: &'static [&'static str] =
        &["tail", "head", "y_tail", "y_head", "delta", "slots"];

    pub fn new(
        layout: &DecisionLayout,
        y_before: &[f64],
        w_before: &[f64],
        w_after: &[f64],
    ) -> Self {
        let mut rows: Vec<ScatterRow> = (0..layout.len())
            .map(|k| {
                let slots = layout.slots(k);
                let (tail, head) = slots[0];
                ScatterRow {
                    tail,
                    head,
                    y_tail: y_before[tail],
                    y_head: y_before[head],
                    delta: w_after[k] - w_before[k],
                    slots: slots.len(),
                }
            })
            .collect();
        rows.sort_by(|a, b| a.delta.abs().total_cmp(&b.delta.abs()));
        Self { rows }
    }

    pub fn camp_statistics(&self, y_bar: f64) -> CampStatistics {
        let mut s = CampStatistics::default();
        let (mut cross_up, mut cross_changed, mut within_up, mut within_changed) = (0, 0, 0, 0);
        for r in &self.rows {
            let cross = (r.y_tail - y_bar) * (r.y_head - y_bar) < 0.0;
            let weighted = r.delta * r.slots as f64;
            let changed = r.delta != 0.0;
            if cross {
                s.cross_delta += weighted;
                s.cross_rows += 1;
                cross_changed += usize::from(changed);
                cross_up += usize::from(r.delta > 0.0);
            } else {
                s.within_delta += weighted;
                s.within_rows += 1;
                within_changed += usize::from(changed);
                within_up += usize::from(r.delta > 0.0);
            }
        }
        let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        s.cross_increase_fraction = frac(cross_up, cross_changed);
        s.within_increase_fraction = frac(within_up, within_changed);
        s
    }

    /// Net weight change on the outgoing slots of every node.
    pub fn outgoing_change(&self, layout: &DecisionLayout) -> Vec<f64> {
        let mut out = vec![0.0; layout.n()];
        for r in &self.rows {
            out[r.tail] += r.delta;
            if r.slots > 1 {
                out[r.head] += r.delta;
            }
        }
        out
    }
}
