//! Dataset ingestion: synthetic generators and the two-file format (edge
//! list plus one opinion per line).

use anyhow::{Context, Result};
use fjnet::graph::{synthesize_bimodal, synthesize_polarized, BimodalConfig};
use fjnet::{load_edge_list, load_opinions, recover_internal, Topology};

use crate::config::{Dataset, OpinionKind};

/// A network with its opinions as supplied.
#[derive(Clone, Debug)]
pub struct Network {
    pub topology: Topology,
    pub opinions: Vec<f64>,
    pub kind: OpinionKind,
    /// Camp labels of synthetic two-camp networks.
    pub camp: Option<Vec<u8>>,
}

impl Network {
    pub fn n(&self) -> usize {
        self.topology.n()
    }

    /// Internal opinions: as given, or recovered from the expressed ones as
    /// `s = A(w) y`. Recovered values are not clipped; a warning is returned
    /// when some fall outside `[0, 1]`.
    pub fn internal(&self) -> Result<(Vec<f64>, Option<String>)> {
        match self.kind {
            OpinionKind::Internal => Ok((self.opinions.clone(), None)),
            OpinionKind::Expressed => {
                let s = recover_internal(&self.topology, &self.opinions)?;
                let outside = s.iter().filter(|v| !(0.0..=1.0).contains(*v)).count();
                let warning = (outside > 0).then(|| {
                    let (lo, hi) = s
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                            (a.min(v), b.max(v))
                        });
                    format!(
                        "{outside} of {} recovered internal opinions lie outside [0, 1] \
                         (range {lo:.3} to {hi:.3}); they are used unclipped",
                        s.len()
                    )
                });
                Ok((s, warning))
            }
        }
    }
}

/// Builds or reads `dataset`; `truncate` keeps the first nodes of a file
/// dataset.
pub fn load(dataset: &Dataset, truncate: Option<usize>, seed: u64) -> Result<Network> {
    match dataset {
        Dataset::Polarized {
            n,
            avg_degree,
            split,
        } => {
            let density = (avg_degree / (*n as f64 - 1.0)).min(1.0);
            let (topology, opinions) = synthesize_polarized(*n, density, *split, seed)?;
            Ok(Network {
                topology,
                opinions: opinions.s,
                kind: OpinionKind::Internal,
                camp: None,
            })
        }
        Dataset::Bimodal {
            n,
            p_in,
            p_out,
            low,
            high,
        } => {
            let net = synthesize_bimodal(&BimodalConfig {
                n: *n,
                p_in: *p_in,
                p_out: *p_out,
                low: *low,
                high: *high,
                seed,
            })?;
            Ok(Network {
                topology: net.topology,
                opinions: net.opinions,
                kind: OpinionKind::Expressed,
                camp: Some(net.camp),
            })
        }
        Dataset::File {
            edges,
            opinions,
            directed,
            opinion_kind,
        } => {
            let mut topology = load_edge_list(edges, *directed)
                .with_context(|| format!("loading edges {}", edges.display()))?;
            let mut values = load_opinions(opinions, None)
                .with_context(|| format!("loading opinions {}", opinions.display()))?;
            anyhow::ensure!(
                values.len() >= topology.n(),
                "{} has {} opinions but the network has {} nodes",
                opinions.display(),
                values.len(),
                topology.n()
            );
            if values.len() > topology.n() {
                topology = topology.with_extra_nodes(values.len() - topology.n());
            }
            if let Some(k) = truncate {
                topology = topology.truncated(k);
                values.truncate(topology.n());
            }
            Ok(Network {
                topology,
                opinions: values,
                kind: *opinion_kind,
                camp: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_dataset_with_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let edges = dir.path().join("edges.txt");
        let ops = dir.path().join("opinions.txt");
        writeln!(std::fs::File::create(&edges).unwrap(), "0 1\n1 2\n2 3").unwrap();
        writeln!(std::fs::File::create(&ops).unwrap(), "0.1\n0.2\n0.8\n0.9").unwrap();
        let ds = Dataset::File {
            edges,
            opinions: ops,
            directed: false,
            opinion_kind: OpinionKind::Expressed,
        };
        let net = load(&ds, Some(3), 0).unwrap();
        assert_eq!(net.n(), 3);
        assert_eq!(net.opinions, vec![0.1, 0.2, 0.8]);
        assert!(net.topology.is_symmetric(0.0));
        assert_eq!(net.topology.nnz(), 4);
    }

    #[test]
    fn recovered_opinions_warn_outside_unit_interval() {
        let topology = Topology::from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let net = Network {
            topology,
            opinions: vec![0.0, 1.0],
            kind: OpinionKind::Expressed,
            camp: None,
        };
        let (s, warning) = net.internal().unwrap();
        assert_eq!(s, vec![-1.0, 2.0]);
        assert!(warning.is_some());
    }
}
