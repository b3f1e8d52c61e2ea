use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use super::topology::Topology;
use super::OpinionState;
use crate::error::{Error, Result};

/// Directed Erdős–Rényi network with internal opinions in `{-1, +1}`.
///
/// Every ordered pair `i != j` is an edge of weight 1 with probability
/// `density`; gaps between successive edges are drawn geometrically so the
/// cost is proportional to the number of edges. `round(split * n)` nodes,
/// chosen at random, get `s_i = +1`. Output is a pure function of the
/// arguments.
pub fn synthesize_polarized(
    n: usize,
    density: f64,
    split: f64,
    seed: u64,
) -> Result<(Topology, OpinionState)> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need n >= 2, got {n}")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "edge density must lie in (0, 1], got {density}"
        )));
    }
    if !(0.0..=1.0).contains(&split) {
        return Err(Error::InvalidConfig(format!(
            "opinion split must lie in [0, 1], got {split}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let total = (n as u64) * (n as u64 - 1);
    let gaps = Geometric::new(density).expect("density checked above");
    let mut triples = Vec::with_capacity((density * total as f64 * 1.1) as usize + 16);
    let mut idx: u64 = gaps.sample(&mut rng);
    while idx < total {
        let i = (idx / (n as u64 - 1)) as usize;
        let r = (idx % (n as u64 - 1)) as usize;
        let j = if r < i { r } else { r + 1 };
        triples.push((i, j, 1.0));
        idx = idx.saturating_add(1).saturating_add(gaps.sample(&mut rng));
    }
    let topology = Topology::from_checked_triples(n, triples);

    let positives = (split * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut s = vec![-1.0; n];
    for &i in &order[..positives] {
        s[i] = 1.0;
    }
    Ok((topology, OpinionState::from_internal(s)?))
}

/// Parameters of [`synthesize_bimodal`].
#[derive(Clone, Debug)]
pub struct BimodalConfig {
    pub n: usize,
    /// Edge probability between two members of the same camp.
    pub p_in: f64,
    /// Edge probability across camps.
    pub p_out: f64,
    /// Range of opinions in camp 0.
    pub low: (f64, f64),
    /// Range of opinions in camp 1.
    pub high: (f64, f64),
    pub seed: u64,
}

impl Default for BimodalConfig {
    fn default() -> Self {
        Self {
            n: 150,
            p_in: 0.1,
            p_out: 0.02,
            low: (0.1, 0.45),
            high: (0.55, 0.9),
            seed: 0,
        }
    }
}

/// Undirected two-camp network with homophilous edges.
#[derive(Clone, Debug)]
pub struct BimodalNetwork {
    /// Symmetric adjacency with unit weights.
    pub topology: Topology,
    /// Observed (expressed) opinion of every node, uniform within its camp's
    /// range. Internal opinions are left to the caller, typically recovered
    /// as `s = A(w) y`.
    pub opinions: Vec<f64>,
    /// Camp label (0 or 1) of every node.
    pub camp: Vec<u8>,
}

/// Stochastic block model with two equal camps and expressed opinions in
/// `[0, 1]`.
///
/// Nodes left isolated by the draw are attached to a random member of their
/// own camp, so every user has at least one neighbour.
pub fn synthesize_bimodal(config: &BimodalConfig) -> Result<BimodalNetwork> {
    let n = config.n;
    if n < 4 {
        return Err(Error::InvalidConfig(format!("need n >= 4, got {n}")));
    }
    for (name, p) in [("p_in", config.p_in), ("p_out", config.p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let camp: Vec<u8> = (0..n).map(|i| u8::from(i >= n / 2)).collect();
    let opinions: Vec<f64> = camp
        .iter()
        .map(|&c| {
            let (lo, hi) = if c == 0 { config.low } else { config.high };
            rng.random_range(lo..=hi)
        })
        .collect();

    let mut degree = vec![0usize; n];
    let mut triples = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if camp[i] == camp[j] {
                config.p_in
            } else {
                config.p_out
            };
            if rng.random::<f64>() < p {
                triples.push((i, j, 1.0));
                triples.push((j, i, 1.0));
                degree[i] += 1;
                degree[j] += 1;
            }
        }
    }
    for i in 0..n {
        if degree[i] > 0 {
            continue;
        }
        let mates: Vec<usize> = (0..n).filter(|&j| j != i && camp[j] == camp[i]).collect();
        let j = *mates
            .choose(&mut rng)
            .expect("camp has at least two members");
        triples.push((i, j, 1.0));
        triples.push((j, i, 1.0));
        degree[i] += 1;
        degree[j] += 1;
    }

    Ok(BimodalNetwork {
        topology: Topology::from_checked_triples(n, triples),
        opinions,
        camp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_when_density_is_one() {
        let (t, o) = synthesize_polarized(4, 1.0, 0.5, 7).unwrap();
        assert_eq!(t.nnz(), 12);
        assert_eq!(o.s.iter().filter(|&&v| v == 1.0).count(), 2);
        assert_eq!(o.s.iter().filter(|&&v| v == -1.0).count(), 2);
        assert!(t.entries().all(|(i, j, _)| i != j));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = synthesize_polarized(50, 0.1, 0.3, 11).unwrap();
        let b = synthesize_polarized(50, 0.1, 0.3, 11).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let c = synthesize_polarized(50, 0.1, 0.3, 12).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn edge_count_near_expectation() {
        let (t, _) = synthesize_polarized(1000, 0.01, 0.5, 1).unwrap();
        let expected = 0.01 * 1000.0 * 999.0;
        let got = t.nnz() as f64;
        assert!(
            (got - expected).abs() <= 0.1 * expected,
            "{got} vs {expected}"
        );
    }

    #[test]
    fn rejects_bad_density() {
        assert!(synthesize_polarized(10, 0.0, 0.5, 0).is_err());
        assert!(synthesize_polarized(10, 1.5, 0.5, 0).is_err());
        assert!(synthesize_polarized(1, 0.5, 0.5, 0).is_err());
    }

    #[test]
    fn bimodal_is_symmetric_and_connected_per_node() {
        let net = synthesize_bimodal(&BimodalConfig {
            n: 60,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        assert!(net.topology.is_symmetric(0.0));
        assert!((0..60).all(|i| net.topology.row_sum(i) > 0.0));
        assert!(net
            .opinions
            .iter()
            .zip(&net.camp)
            .all(|(&s, &c)| if c == 0 { s < 0.5 } else { s > 0.5 }));
    }
}
