use fjnet::nad::{disagreement_coefficients, inner_objective};
use fjnet::{
    nad_feasible_set, nad_inner_step, nad_run, DecisionLayout, DecisionVector, NadConfig,
    Primitive, Topology,
};
use fjnet_oracle::qp::Polyhedron;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(rng: &mut ChaCha8Rng) -> (DecisionVector, Vec<f64>) {
    loop {
        let n = rng.random_range(3..=6);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && edges.len() < 20 && rng.random_bool(0.6) {
                    edges.push((i, j, rng.random_range(0.2..2.0)));
                }
            }
        }
        let base = Topology::from_edges(n, edges).unwrap();
        let layout = DecisionLayout::existing_edges(&base).unwrap();
        if layout.len() < 3 {
            continue;
        }
        let d = DecisionVector::from_topology(layout, &base).unwrap();
        let y = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        return (d, y);
    }
}

fn oracle_polyhedron(reference: &DecisionVector) -> Polyhedron {
    let m = reference.len();
    let mut poly = Polyhedron::new(m);
    if let Primitive::DegreeEquality { rows, targets } = Primitive::degree_preserving(reference) {
        for (row, d) in rows.iter().zip(targets) {
            if row.is_empty() {
                continue;
            }
            let mut dense = vec![0.0; m];
            for &(k, a) in row {
                dense[k] += a;
            }
            poly.equality(dense, d);
        }
    }
    poly.lower_bounds(&vec![0.0; m]);
    poly
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn inner_step_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for lambda in [0.0, 0.2] {
        for _ in 0..15 {
            let (reference, y) = random_instance(&mut rng);
            let config = NadConfig {
                lambda,
                ..Default::default()
            };
            let set = nad_feasible_set(&reference, &config).unwrap();
            let inner =
                nad_inner_step(reference.layout(), &y, reference.values(), &set, &config).unwrap();
            assert!(inner.converged);
            let c = disagreement_coefficients(reference.layout(), &y);
            let rho = 0.2 * reference.assemble().unwrap().frobenius_norm();
            let poly = oracle_polyhedron(&reference);
            let oracle = if lambda > 0.0 {
                let target: Vec<f64> = c.iter().map(|ck| -ck / (2.0 * lambda)).collect();
                poly.project_with_ball(&target, reference.values(), rho)
            } else {
                poly.minimize_linear_with_ball(&c, reference.values(), rho)
            };
            let err = max_diff(&inner.w, &oracle);
            assert!(err <= 1e-5, "lambda={lambda}: {err:e}");
        }
    }
}

#[test]
fn inner_step_never_increases_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for lambda in [0.0, 0.2] {
        for _ in 0..10 {
            let (reference, y) = random_instance(&mut rng);
            let config = NadConfig {
                lambda,
                ..Default::default()
            };
            let set = nad_feasible_set(&reference, &config).unwrap();
            let c = disagreement_coefficients(reference.layout(), &y);
            let before = inner_objective(reference.layout(), &c, reference.values(), lambda);
            let inner =
                nad_inner_step(reference.layout(), &y, reference.values(), &set, &config).unwrap();
            assert!(inner.objective <= before + 1e-9);
            assert!(set.check_membership(&inner.w).is_member(1e-8));
        }
    }
}

#[test]
fn linear_inner_minimizer_sits_on_ball_boundary() {
    let mut b = DecisionLayout::builder(2);
    b.tied(&[(0, 1), (1, 0)]);
    let d = DecisionVector::new(b.build().unwrap(), vec![1.0]).unwrap();
    let config = NadConfig {
        degree_preserving: false,
        ..Default::default()
    };
    let set = nad_feasible_set(&d, &config).unwrap();
    let inner = nad_inner_step(d.layout(), &[2.0 / 3.0, 1.0 / 3.0], &[1.0], &set, &config).unwrap();
    let Primitive::FrobeniusBall { radius, metric, .. } = &set.primitives()[0] else {
        panic!("ball expected first")
    };
    let distance = (metric[0] * (inner.w[0] - 1.0).powi(2)).sqrt();
    assert!((distance - radius).abs() < 1e-9);
}

#[test]
fn every_iterate_keeps_degrees_and_ball() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (reference, _) = random_instance(&mut rng);
    let n = reference.layout().n();
    let s: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let config = NadConfig::default();
    let set = nad_feasible_set(&reference, &config).unwrap();
    let report = nad_run(&reference, &s, &set, &config).unwrap();
    assert!(report.max_violation <= 1e-8, "{}", report.max_violation);
    let before = reference.assemble().unwrap().row_sums();
    let after = reference
        .with_values(report.final_w.clone())
        .unwrap()
        .assemble()
        .unwrap()
        .row_sums();
    assert!(max_diff(&before, &after) <= 1e-8);
}
