use fjnet::{DecisionLayout, DecisionVector, FeasibleSet, Primitive, ProjectionOptions, Topology};
use fjnet_oracle::qp::Polyhedron;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Directed network with at most `max_m` edges on `n` nodes.
fn random_network(rng: &mut ChaCha8Rng, n: usize, max_m: usize) -> Topology {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && edges.len() < max_m && rng.random_bool(0.5) {
                edges.push((i, j, rng.random_range(0.2..2.0)));
            }
        }
    }
    Topology::from_edges(n, edges).unwrap()
}

fn degree_oracle(poly: &mut Polyhedron, primitive: &Primitive) {
    if let Primitive::DegreeEquality { rows, targets } = primitive {
        for (row, &d) in rows.iter().zip(targets) {
            if row.is_empty() {
                continue;
            }
            let mut dense = vec![0.0; poly.dim];
            for &(k, a) in row {
                dense[k] += a;
            }
            poly.equality(dense, d);
        }
    }
}

#[test]
fn budget_family_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..40 {
        let m = rng.random_range(2..=30);
        let subset: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.7)).collect();
        let b = rng.random_range(0.1..3.0);
        let set = FeasibleSet::budget(m, subset.clone(), b).unwrap();
        let mut poly = Polyhedron::new(m);
        poly.lower_bounds(&vec![0.0; m]).budget(&subset, b);
        let w: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..2.0)).collect();
        let z = set.project(&w).unwrap();
        let oracle = poly.project(&w);
        assert!(max_diff(&z, &oracle) <= 1e-6, "{z:?} vs {oracle:?}");
    }
}

#[test]
fn degree_ball_family_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut tested = 0;
    while tested < 30 {
        let n = rng.random_range(3..=7);
        let base = random_network(&mut rng, n, 30);
        let layout = DecisionLayout::existing_edges(&base).unwrap();
        if layout.is_empty() {
            continue;
        }
        let reference = DecisionVector::from_topology(layout.clone(), &base).unwrap();
        let delta = rng.random_range(0.05..0.5);
        let degree = Primitive::degree_preserving(&reference);
        let ball = Primitive::frobenius_fraction(&reference, delta).unwrap();
        let set = FeasibleSet::with_initial(
            layout.len(),
            vec![degree.clone(), ball, Primitive::NonNegative],
            ProjectionOptions::default(),
            reference.values(),
        )
        .unwrap();
        let m = layout.len();
        let mut poly = Polyhedron::new(m);
        degree_oracle(&mut poly, &degree);
        poly.lower_bounds(&vec![0.0; m]);
        let rho = delta * base.frobenius_norm();
        let w: Vec<f64> = reference
            .values()
            .iter()
            .map(|x| x + rng.random_range(-1.5..1.5))
            .collect();
        let z = set.project(&w).unwrap();
        let oracle = poly.project_with_ball(&w, reference.values(), rho);
        assert!(
            max_diff(&z, &oracle) <= 1e-6,
            "m={m}: {}",
            max_diff(&z, &oracle)
        );
        tested += 1;
    }
}

#[test]
fn degree_budget_family_matches_oracle() {
    // no ball, so the degree rows and the budget are alternated by Dykstra
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut tested = 0;
    while tested < 30 {
        let n = rng.random_range(3..=6);
        let base = random_network(&mut rng, n, 30);
        let layout = DecisionLayout::existing_edges(&base).unwrap();
        let m = layout.len();
        if m < 2 {
            continue;
        }
        let reference = DecisionVector::from_topology(layout, &base).unwrap();
        let degree = Primitive::degree_preserving(&reference);
        let b = reference.values().iter().sum::<f64>() * rng.random_range(1.0..1.3);
        let set = FeasibleSet::with_initial(
            m,
            vec![
                degree.clone(),
                Primitive::budget(m, b),
                Primitive::NonNegative,
            ],
            ProjectionOptions {
                tol: 1e-11,
                ..ProjectionOptions::default()
            },
            reference.values(),
        )
        .unwrap();
        assert!(set.piece_count() > 1);
        let mut poly = Polyhedron::new(m);
        degree_oracle(&mut poly, &degree);
        poly.lower_bounds(&vec![0.0; m])
            .budget(&(0..m).collect::<Vec<_>>(), b);
        let w: Vec<f64> = reference
            .values()
            .iter()
            .map(|x| x + rng.random_range(-1.0..1.5))
            .collect();
        let z = set.project(&w).unwrap();
        let oracle = poly.project(&w);
        assert!(max_diff(&z, &oracle) <= 1e-6, "{}", max_diff(&z, &oracle));
        tested += 1;
    }
}

#[test]
fn undirected_tied_family_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let n = rng.random_range(3..=8);
        let layout = DecisionLayout::complete_undirected(n).unwrap();
        let m = layout.len();
        let values: Vec<f64> = (0..m)
            .map(|_| {
                if rng.random_bool(0.4) {
                    rng.random_range(0.2..1.5)
                } else {
                    0.0
                }
            })
            .collect();
        let reference = DecisionVector::new(layout.clone(), values).unwrap();
        if reference.values().iter().all(|&v| v == 0.0) {
            continue;
        }
        let delta = 0.2;
        let degree = Primitive::degree_preserving(&reference);
        let set = FeasibleSet::with_initial(
            m,
            vec![
                degree.clone(),
                Primitive::frobenius_fraction(&reference, delta).unwrap(),
                Primitive::NonNegative,
            ],
            ProjectionOptions::default(),
            reference.values(),
        )
        .unwrap();
        let mut poly = Polyhedron::new(m);
        degree_oracle(&mut poly, &degree);
        poly.lower_bounds(&vec![0.0; m]);
        // every variable counts twice toward the Frobenius norm
        let rho = delta * reference.assemble().unwrap().frobenius_norm() / 2f64.sqrt();
        let w: Vec<f64> = reference
            .values()
            .iter()
            .map(|x| x + rng.random_range(-1.0..1.0))
            .collect();
        let z = set.project(&w).unwrap();
        let oracle = poly.project_with_ball(&w, reference.values(), rho);
        assert!(
            max_diff(&z, &oracle) <= 1e-6,
            "n={n}: {}",
            max_diff(&z, &oracle)
        );
    }
}

#[test]
fn explicit_tie_groups_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut tested = 0;
    while tested < 30 {
        let n = rng.random_range(3..=6);
        let base = random_network(&mut rng, n, 30);
        let layout = DecisionLayout::existing_edges(&base).unwrap();
        let m = layout.len();
        if m < 4 {
            continue;
        }
        let mut values = DecisionVector::from_topology(layout.clone(), &base)
            .unwrap()
            .values()
            .to_vec();
        let groups = vec![vec![0, m - 1], vec![1, 2]];
        for g in &groups {
            let mean = g.iter().map(|&k| values[k]).sum::<f64>() / g.len() as f64;
            for &k in g {
                values[k] = mean;
            }
        }
        let reference = DecisionVector::new(layout, values).unwrap();
        let degree = Primitive::degree_preserving(&reference);
        let ball = Primitive::frobenius_fraction(&reference, 0.3).unwrap();
        let rho = match &ball {
            Primitive::FrobeniusBall { radius, .. } => *radius,
            _ => unreachable!(),
        };
        let set = FeasibleSet::with_initial(
            m,
            vec![
                Primitive::TieGroups(groups.clone()),
                degree.clone(),
                ball,
                Primitive::NonNegative,
            ],
            ProjectionOptions::default(),
            reference.values(),
        )
        .unwrap();
        let mut poly = Polyhedron::new(m);
        poly.ties(&groups);
        degree_oracle(&mut poly, &degree);
        poly.lower_bounds(&vec![0.0; m]);
        let w: Vec<f64> = reference
            .values()
            .iter()
            .map(|x| x + rng.random_range(-1.0..1.0))
            .collect();
        let z = set.project(&w).unwrap();
        let oracle = poly.project_with_ball(&w, reference.values(), rho);
        assert!(max_diff(&z, &oracle) <= 1e-6, "{}", max_diff(&z, &oracle));
        tested += 1;
    }
}

#[test]
fn ellipsoidal_ball_satisfies_kkt() {
    // a directed layout with one tied pair has mixed multiplicities
    let mut b = DecisionLayout::builder(4);
    b.tied(&[(0, 1), (1, 0)]);
    b.variable(2, 3);
    b.variable(3, 0);
    let reference = DecisionVector::new(b.build().unwrap(), vec![1.0, 0.5, 2.0]).unwrap();
    let ball = Primitive::frobenius_fraction(&reference, 0.3).unwrap();
    let set = FeasibleSet::new(3, vec![ball.clone()], ProjectionOptions::default()).unwrap();
    let w = [3.0, -1.0, 2.5];
    let z = set.project(&w).unwrap();
    let Primitive::FrobeniusBall {
        center,
        radius,
        metric,
    } = ball
    else {
        unreachable!()
    };
    let size: f64 = (0..3).map(|k| metric[k] * (z[k] - center[k]).powi(2)).sum();
    assert!((size.sqrt() - radius).abs() < 1e-12);
    let mu: Vec<f64> = (0..3)
        .map(|k| (w[k] - z[k]) / (metric[k] * (z[k] - center[k])))
        .collect();
    assert!(mu[0] > 0.0 && (mu[0] - mu[1]).abs() < 1e-9 && (mu[0] - mu[2]).abs() < 1e-9);
}

fn nad_set(n: usize, seed: u64) -> (FeasibleSet, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = DecisionLayout::complete_undirected(n).unwrap();
    let values: Vec<f64> = (0..layout.len())
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 })
        .collect();
    let reference = DecisionVector::new(layout, values).unwrap();
    let set = FeasibleSet::new(
        reference.len(),
        vec![
            Primitive::degree_preserving(&reference),
            Primitive::frobenius_fraction(&reference, 0.2).unwrap(),
            Primitive::NonNegative,
        ],
        ProjectionOptions::default(),
    )
    .unwrap();
    (set, reference.values().to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn budget_projection_properties(
        u in prop::collection::vec(-2.0f64..3.0, 12),
        v in prop::collection::vec(-2.0f64..3.0, 12),
        b in 0.0f64..4.0,
    ) {
        let set = FeasibleSet::budget(12, (0..12).collect(), b).unwrap();
        let pu = set.project(&u).unwrap();
        let pv = set.project(&v).unwrap();
        prop_assert!(set.check_membership(&pu).is_member(1e-10));
        prop_assert!(max_diff(&set.project(&pu).unwrap(), &pu) <= 1e-12);
        prop_assert!(dist(&pu, &pv) <= dist(&u, &v) + 1e-12);
    }

    #[test]
    fn nad_projection_properties(
        u in prop::collection::vec(-1.0f64..2.0, 21),
        v in prop::collection::vec(-1.0f64..2.0, 21),
        seed in 0u64..20,
    ) {
        let (set, _) = nad_set(7, seed);
        let pu = set.project(&u).unwrap();
        let pv = set.project(&v).unwrap();
        prop_assert!(set.check_membership(&pu).is_member(1e-8));
        prop_assert!(max_diff(&set.project(&pu).unwrap(), &pu) <= 1e-7);
        prop_assert!(dist(&pu, &pv) <= dist(&u, &v) + 1e-7);
        prop_assert!(pu.iter().all(|&x| x >= 0.0));
    }
}
