//! Network storage and the mapping between decision variables and `W`.

mod decision;
mod io;
mod synth;
mod topology;

pub use decision::{assemble_weights, DecisionLayout, DecisionVector, LayoutBuilder, SlotOwner};
pub use io::{load_edge_list, load_opinions, parse_edge_list, write_edge_list, write_opinions};
pub use synth::{synthesize_bimodal, synthesize_polarized, BimodalConfig, BimodalNetwork};
pub use topology::Topology;

use crate::error::{Error, Result};

/// Internal opinions `s` and external (expressed) opinions `y`.
///
/// `s` never changes during an optimization run. `y` holds the most recent
/// equilibrium, or `s` itself before any solve.
#[derive(Clone, Debug, PartialEq)]
pub struct OpinionState {
    pub s: Vec<f64>,
    pub y: Vec<f64>,
}

impl OpinionState {
    pub fn new(s: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if s.len() != y.len() {
            return Err(Error::DimensionMismatch {
                what: "external opinions",
                expected: s.len(),
                actual: y.len(),
            });
        }
        finite(&s, "internal opinion")?;
        finite(&y, "external opinion")?;
        Ok(Self { s, y })
    }

    /// State before any interaction: `y = s`.
    pub fn from_internal(s: Vec<f64>) -> Result<Self> {
        let y = s.clone();
        Self::new(s, y)
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }
}

fn finite(v: &[f64], what: &str) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(k) => Err(Error::NonFinite {
            location: format!("{what} {k}"),
        }),
        None => Ok(()),
    }
}
