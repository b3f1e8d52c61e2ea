use fjnet::equilibrium::SolveMethod;
use fjnet::graph::LayoutBuilder;
use fjnet::hypergradient::finite_difference_hypergradient;
use fjnet::objectives::{relative_error, ObjectiveParams};
use fjnet::{
    build_system, hypergradient, j1f_vjp, solve_adjoint, DecisionLayout, DecisionVector,
    EvalContext, LinearSolveConfig, ObjectiveRegistry,
};
use fjnet_oracle::fj::{j1f, sensitivity, DenseNetwork};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random layout mixing free, tied and frozen slots on `n` nodes.
fn random_decision(rng: &mut ChaCha8Rng, n: usize) -> DecisionVector {
    let mut b: LayoutBuilder = DecisionLayout::builder(n);
    let mut used = std::collections::HashSet::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || used.contains(&(i, j)) {
                continue;
            }
            let r: f64 = rng.random();
            if r < 0.25 {
                b.variable(i, j);
                used.insert((i, j));
            } else if r < 0.35 && !used.contains(&(j, i)) {
                b.tied(&[(i, j), (j, i)]);
                used.insert((i, j));
                used.insert((j, i));
            } else if r < 0.45 {
                b.frozen(i, j, rng.random_range(0.1..2.0));
                used.insert((i, j));
            }
        }
    }
    let layout = b.build().unwrap();
    let values = (0..layout.len())
        .map(|_| rng.random_range(0.1..2.0))
        .collect();
    DecisionVector::new(layout, values).unwrap()
}

fn dense_network(d: &DecisionVector) -> DenseNetwork {
    let t = d.assemble().unwrap();
    DenseNetwork {
        n: t.n(),
        slots: t.entries().collect(),
    }
}

fn variables(layout: &DecisionLayout) -> Vec<Vec<(usize, usize)>> {
    (0..layout.len())
        .map(|k| layout.slots(k).to_vec())
        .collect()
}

fn tight() -> LinearSolveConfig {
    LinearSolveConfig::default().with_tol(1e-13)
}

#[test]
fn vjp_matches_dense_jacobian() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let d = random_decision(&mut rng, 10);
        let y: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = j1f_vjp(d.layout(), &y, &v).unwrap();
        let dense = j1f(10, &variables(d.layout()), &y).transpose() * DVector::from_vec(v);
        for k in 0..fast.len() {
            assert!((fast[k] - dense[k]).abs() <= 1e-12);
        }
    }
}

#[test]
fn consensus_kills_vjp() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = random_decision(&mut rng, 8);
    let g = j1f_vjp(d.layout(), &[0.25; 8], &[1.0; 8]).unwrap();
    assert!(g.iter().all(|&x| x == 0.0));
}

#[test]
fn adjoint_matches_dense_transposed_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let d = random_decision(&mut rng, 15);
        let g: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = vec![0.0; 15];
        let system = build_system(d.assemble().unwrap(), &s).unwrap();
        let v = solve_adjoint(&system, &g, &tight(), None).unwrap();
        let a = dense_network(&d).system_matrix();
        let dense = a.transpose().lu().solve(&DVector::from_vec(g)).unwrap();
        for k in 0..15 {
            assert!((v.x[k] - dense[k]).abs() <= 1e-8);
        }
    }
}

#[test]
fn adjoint_path_equals_explicit_sensitivity() {
    let registry = ObjectiveRegistry::with_builtins();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for round in 0..12 {
        let n = rng.random_range(3..=15);
        let d = random_decision(&mut rng, n);
        if d.is_empty() {
            continue;
        }
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for name in registry.names() {
            let obj = registry
                .build(
                    name,
                    &ObjectiveParams {
                        lambda: 0.2,
                        nodes: None,
                    },
                )
                .unwrap();
            let r = hypergradient(&d, &s, obj.as_ref(), &tight()).unwrap();
            let topo = d.assemble().unwrap();
            let ctx = EvalContext {
                decision: &d,
                topology: &topo,
                y: &r.y,
            };
            let gy = DVector::from_vec(obj.grad_y(&ctx));
            let gw = obj.grad_w(&ctx);
            let jy = sensitivity(&dense_network(&d), &variables(d.layout()), &s);
            let implicit = jy.transpose() * gy;
            for k in 0..d.len() {
                let expected = gw[k] + implicit[k];
                assert!(
                    (r.grad[k] - expected).abs() <= 1e-8,
                    "round {round} {name} k={k}: {} vs {expected}",
                    r.grad[k]
                );
            }
        }
    }
}

#[test]
fn hypergradient_matches_finite_differences() {
    let registry = ObjectiveRegistry::with_builtins();
    let dense = LinearSolveConfig::default().with_method(SolveMethod::DenseDirect);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let n = rng.random_range(3..=20);
        let d = random_decision(&mut rng, n);
        if d.is_empty() {
            continue;
        }
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for name in registry.names() {
            let obj = registry
                .build(
                    name,
                    &ObjectiveParams {
                        lambda: 0.2,
                        nodes: None,
                    },
                )
                .unwrap();
            let r = hypergradient(&d, &s, obj.as_ref(), &tight()).unwrap();
            let coords: Vec<usize> = (0..d.len()).collect();
            let fd = finite_difference_hypergradient(&d, &s, obj.as_ref(), &dense, 1e-6, &coords)
                .unwrap();
            // entries below the floor are compared absolutely: double-precision
            // differences at h = 1e-6 carry ~1e-10 of noise
            let floor = 1e-4;
            for k in 0..d.len() {
                let e = relative_error(r.grad[k], fd[k], floor);
                assert!(
                    e <= 1e-5,
                    "{name} k={k}: {} vs {} ({e:e})",
                    r.grad[k],
                    fd[k]
                );
            }
        }
    }
}
