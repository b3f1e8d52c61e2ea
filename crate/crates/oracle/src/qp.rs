//! Dense projection onto polyhedra (optionally intersected with a ball) by
//! nullspace elimination of the equalities and least-distance programming
//! over the inequalities, solved through non-negative least squares.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// A polyhedron `{z : a_eq z = b_eq, g z >= h}` in `R^dim`.
#[derive(Clone, Debug)]
pub struct Polyhedron {
    pub dim: usize,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub g: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

impl Polyhedron {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            g: Vec::new(),
            h: Vec::new(),
        }
    }

    pub fn equality(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        assert_eq!(row.len(), self.dim);
        self.a_eq.push(row);
        self.b_eq.push(rhs);
        self
    }

    pub fn inequality(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        assert_eq!(row.len(), self.dim);
        self.g.push(row);
        self.h.push(rhs);
        self
    }

    /// `z_k >= l_k` for all `k`.
    pub fn lower_bounds(&mut self, l: &[f64]) -> &mut Self {
        for (k, &lk) in l.iter().enumerate() {
            let mut row = vec![0.0; self.dim];
            row[k] = 1.0;
            self.inequality(row, lk);
        }
        self
    }

    /// `sum_{k in subset} z_k <= b`.
    pub fn budget(&mut self, subset: &[usize], b: f64) -> &mut Self {
        let mut row = vec![0.0; self.dim];
        for &k in subset {
            row[k] = -1.0;
        }
        self.inequality(row, -b)
    }

    /// `z_a = z_b` for consecutive members of every group.
    pub fn ties(&mut self, groups: &[Vec<usize>]) -> &mut Self {
        for group in groups {
            for pair in group.windows(2) {
                let mut row = vec![0.0; self.dim];
                row[pair[0]] = 1.0;
                row[pair[1]] -= 1.0;
                self.equality(row, 0.0);
            }
        }
        self
    }

    /// Euclidean projection of `w`.
    pub fn project(&self, w: &[f64]) -> Vec<f64> {
        let m = self.dim;
        let w = DVector::from_column_slice(w);
        let (zp, null) = if self.a_eq.is_empty() {
            (DVector::zeros(m), DMatrix::identity(m, m))
        } else {
            let a = rows_to_matrix(&self.a_eq, m);
            let b = DVector::from_column_slice(&self.b_eq);
            let zp = a
                .clone()
                .svd(true, true)
                .solve(&b, 1e-12)
                .expect("svd solve");
            assert!(
                (&a * &zp - &b).amax() < 1e-9,
                "equality constraints are inconsistent"
            );
            (zp, nullspace(&a))
        };
        let t0 = null.transpose() * (&w - &zp);
        let t = if self.g.is_empty() {
            t0
        } else {
            let g = rows_to_matrix(&self.g, m);
            let gn = &g * &null;
            let h = DVector::from_column_slice(&self.h) - &g * &zp - &gn * &t0;
            let x = ldp(&gn, &h).expect("polyhedron is non-empty");
            x + t0
        };
        let z = zp + null * t;
        z.iter().copied().collect()
    }

    /// Projection onto the polyhedron intersected with the isotropic ball
    /// `||z - center|| <= radius`; `center` must lie in the polyhedron.
    pub fn project_with_ball(&self, w: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
        let dist = |z: &[f64]| -> f64 {
            z.iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let z0 = self.project(w);
        if dist(&z0) <= radius {
            return z0;
        }
        // KKT: z = P((w + mu c) / (1 + mu)) with the ball active
        let at = |mu: f64| -> Vec<f64> {
            let p: Vec<f64> = w
                .iter()
                .zip(center)
                .map(|(a, c)| (a + mu * c) / (1.0 + mu))
                .collect();
            self.project(&p)
        };
        let mut hi = 1.0;
        while dist(&at(hi)) > radius {
            hi *= 2.0;
            assert!(hi < 1e15, "center does not lie in the polyhedron");
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dist(&at(mid)) > radius {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        at(hi)
    }

    /// `argmin c . z` over the polyhedron intersected with the isotropic ball
    /// around `center`, assuming the minimizer is unique. Uses
    /// `z(t) = P(center - t c)` and bisects `t` until the ball is active.
    pub fn minimize_linear_with_ball(&self, c: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
        let dist = |z: &[f64]| -> f64 {
            z.iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let at = |t: f64| -> Vec<f64> {
            let p: Vec<f64> = center.iter().zip(c).map(|(x, ck)| x - t * ck).collect();
            self.project(&p)
        };
        let mut hi = 1.0;
        while dist(&at(hi)) < radius {
            hi *= 2.0;
            if hi > 1e12 {
                // the linear program's minimizer lies inside the ball
                return at(hi);
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dist(&at(mid)) < radius {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        at(lo)
    }
}

fn rows_to_matrix(rows: &[Vec<f64>], cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

/// Orthonormal basis of `{x : a x = 0}` from the eigenvectors of `a^T a`.
fn nullspace(a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.ncols();
    let ata = a.transpose() * a;
    let eig = SymmetricEigen::new(ata);
    let scale = eig.eigenvalues.amax().max(1.0);
    let cols: Vec<DVector<f64>> = (0..m)
        .filter(|&k| eig.eigenvalues[k].abs() <= 1e-10 * scale)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Least-distance programming: `min ||x|| s.t. g x >= h`, via the NNLS dual.
/// `None` when infeasible.
pub fn ldp(g: &DMatrix<f64>, h: &DVector<f64>) -> Option<DVector<f64>> {
    let (q, n) = g.shape();
    if n == 0 {
        return if h.iter().all(|&v| v <= 1e-10) {
            Some(DVector::zeros(0))
        } else {
            None
        };
    }
    let mut e = DMatrix::zeros(n + 1, q);
    for i in 0..q {
        for j in 0..n {
            e[(j, i)] = g[(i, j)];
        }
        e[(n, i)] = h[i];
    }
    let mut f = DVector::zeros(n + 1);
    f[n] = 1.0;
    let u = nnls(&e, &f);
    let r = &e * &u - &f;
    if r.norm() < 1e-12 || r[n].abs() < 1e-14 {
        return None;
    }
    Some(DVector::from_fn(n, |j, _| -r[j] / r[n]))
}

/// Lawson-Hanson active-set non-negative least squares:
/// `min ||e x - f|| s.t. x >= 0`.
pub fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    let n = e.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-13 * e.amax().max(1.0) * f.amax().max(1.0) * (n.max(1) as f64);
    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
        let sub = DMatrix::from_fn(e.nrows(), idx.len(), |i, j| e[(i, idx[j])]);
        let sol = sub.svd(true, true).solve(f, 1e-14).expect("svd solve");
        let mut z = DVector::zeros(n);
        for (j, &k) in idx.iter().enumerate() {
            z[k] = sol[j];
        }
        z
    };
    for _outer in 0..(3 * n + 10) {
        let grad = e.transpose() * (f - e * &x);
        let candidate = (0..n)
            .filter(|&k| !passive[k])
            .max_by(|&a, &b| grad[a].total_cmp(&grad[b]));
        match candidate {
            Some(j) if grad[j] > tol => passive[j] = true,
            _ => break,
        }
        loop {
            let z = solve_passive(&passive);
            if (0..n).filter(|&k| passive[k]).all(|k| z[k] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for k in 0..n {
                if passive[k] && z[k] <= 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - z[k]));
                }
            }
            x += alpha * (&z - &x);
            for k in 0..n {
                if passive[k] && x[k] <= 1e-15 {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn nnls_clips_negative_direction() {
        let e = DMatrix::identity(2, 2);
        let f = DVector::from_column_slice(&[1.0, -1.0]);
        let x = nnls(&e, &f);
        assert!(close(x.as_slice(), &[1.0, 0.0], 1e-14));
    }

    #[test]
    fn budget_projection() {
        let mut p = Polyhedron::new(2);
        p.lower_bounds(&[0.0, 0.0]).budget(&[0, 1], 1.0);
        assert!(close(&p.project(&[0.5, 0.7]), &[0.4, 0.6], 1e-12));
        assert!(close(&p.project(&[2.0, 0.0]), &[1.0, 0.0], 1e-12));
        assert!(close(&p.project(&[0.2, 0.3]), &[0.2, 0.3], 1e-12));
    }

    #[test]
    fn equality_and_ties() {
        let mut p = Polyhedron::new(3);
        p.equality(vec![1.0, 1.0, 1.0], 3.0).ties(&[vec![0, 1]]);
        let z = p.project(&[0.0, 2.0, 4.0]);
        // z0 = z1 = a, z2 = 3 - 2a, minimize (a)^2 + (a-2)^2 + (3-2a-4)^2
        // derivative: 2a + 2a - 4 + 4(2a + 1) = 12a = 0
        assert!(close(&z, &[0.0, 0.0, 3.0], 1e-12), "{z:?}");
    }

    #[test]
    fn ball_and_linear() {
        let p = Polyhedron::new(2);
        let z = p.project_with_ball(&[3.0, 0.0], &[0.0, 0.0], 1.0);
        assert!(close(&z, &[1.0, 0.0], 1e-12));
        let z = p.minimize_linear_with_ball(&[0.0, 1.0], &[0.0, 0.0], 2.0);
        assert!(close(&z, &[0.0, -2.0], 1e-9), "{z:?}");
    }

    #[test]
    fn infeasible_ldp() {
        // x >= 1 and -x >= 0
        let g = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let h = DVector::from_column_slice(&[1.0, 0.0]);
        assert!(ldp(&g, &h).is_none());
    }
}
