//! Projection onto `{z : z constant on each tie class, C z = d}`.
//!
//! Writing `z = E u` with `u` one value per class and `G = diag(class sizes)`,
//! the projection of `w` has `u = u_bar - G^{-1} C^T lambda` where `u_bar` are
//! the class means and `(C G^{-1} C^T) lambda = C u_bar - d`. When no class
//! touches two rows the system is diagonal; otherwise it is solved by
//! conjugate gradients, which also handles singular but consistent systems.

use crate::error::{Error, Result};
use crate::linalg::{self, LinearOperator};

#[derive(Clone, Debug)]
pub(crate) struct AffineProjector {
    dim: usize,
    class_of: Vec<usize>,
    class_size: Vec<f64>,
    /// Per constraint row, `(class, coefficient)` with distinct classes.
    rows: Vec<Vec<(usize, f64)>>,
    targets: Vec<f64>,
    /// `Some` when the normal matrix is diagonal.
    diagonal: Option<Vec<f64>>,
}

struct Normal<'a>(&'a AffineProjector);

impl LinearOperator for Normal<'_> {
    fn dim(&self) -> usize {
        self.0.rows.len()
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let p = self.0;
        let mut t = vec![0.0; p.class_size.len()];
        for (row, xr) in p.rows.iter().zip(x) {
            for &(c, a) in row {
                t[c] += a * xr;
            }
        }
        for (tc, g) in t.iter_mut().zip(&p.class_size) {
            *tc /= g;
        }
        for (row, o) in p.rows.iter().zip(out.iter_mut()) {
            *o = row.iter().map(|&(c, a)| a * t[c]).sum();
        }
    }
}

impl AffineProjector {
    pub(crate) fn new(
        dim: usize,
        ties: &[Vec<usize>],
        rows: &[Vec<(usize, f64)>],
        targets: &[f64],
    ) -> Result<Self> {
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(parent: &mut [usize], mut k: usize) -> usize {
            while parent[k] != k {
                parent[k] = parent[parent[k]];
                k = parent[k];
            }
            k
        }
        for group in ties {
            for &k in group {
                if k >= dim {
                    return Err(Error::IndexOutOfRange {
                        what: "tied variable",
                        index: k,
                        size: dim,
                    });
                }
            }
            if let Some((&first, rest)) = group.split_first() {
                for &k in rest {
                    let a = find(&mut parent, first);
                    let b = find(&mut parent, k);
                    if a != b {
                        parent[b] = a;
                    }
                }
            }
        }
        let mut class_id = vec![usize::MAX; dim];
        let mut class_of = vec![0; dim];
        let mut class_size: Vec<f64> = Vec::new();
        for k in 0..dim {
            let root = find(&mut parent, k);
            if class_id[root] == usize::MAX {
                class_id[root] = class_size.len();
                class_size.push(0.0);
            }
            class_of[k] = class_id[root];
            class_size[class_of[k]] += 1.0;
        }

        let mut kept_rows = Vec::new();
        let mut kept_targets = Vec::new();
        for (r, (row, &d)) in rows.iter().zip(targets).enumerate() {
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(k, a) in row {
                if k >= dim {
                    return Err(Error::IndexOutOfRange {
                        what: "constrained variable",
                        index: k,
                        size: dim,
                    });
                }
                merged.push((class_of[k], a));
            }
            merged.sort_by_key(|&(c, _)| c);
            merged.dedup_by(|next, prev| {
                if next.0 == prev.0 {
                    prev.1 += next.1;
                    true
                } else {
                    false
                }
            });
            merged.retain(|&(_, a)| a != 0.0);
            if merged.is_empty() {
                if d.abs() > 1e-12 * (1.0 + d.abs()) {
                    return Err(Error::Infeasible(format!(
                        "degree row {r} has no free variables but needs a change of {d}"
                    )));
                }
                continue;
            }
            kept_rows.push(merged);
            kept_targets.push(d);
        }

        let mut seen = vec![false; class_size.len()];
        let disjoint = kept_rows.iter().all(|row| {
            row.iter()
                .all(|&(c, _)| !std::mem::replace(&mut seen[c], true))
        });
        let diagonal = disjoint.then(|| {
            kept_rows
                .iter()
                .map(|row| row.iter().map(|&(c, a)| a * a / class_size[c]).sum())
                .collect()
        });
        Ok(Self {
            dim,
            class_of,
            class_size,
            rows: kept_rows,
            targets: kept_targets,
            diagonal,
        })
    }

    /// Class of every variable, class sizes, rows over classes and targets.
    pub(crate) fn parts(&self) -> (&[usize], &[f64], &[Vec<(usize, f64)>], &[f64]) {
        (&self.class_of, &self.class_size, &self.rows, &self.targets)
    }

    pub(crate) fn has_rows(&self) -> bool {
        !self.rows.is_empty()
    }

    pub(crate) fn project(&self, w: &mut [f64]) -> Result<()> {
        debug_assert_eq!(w.len(), self.dim);
        let mut u = vec![0.0; self.class_size.len()];
        for (k, x) in w.iter().enumerate() {
            u[self.class_of[k]] += x;
        }
        for (uc, g) in u.iter_mut().zip(&self.class_size) {
            *uc /= g;
        }
        if self.has_rows() {
            let residual: Vec<f64> = self
                .rows
                .iter()
                .zip(&self.targets)
                .map(|(row, d)| row.iter().map(|&(c, a)| a * u[c]).sum::<f64>() - d)
                .collect();
            let lambda = match &self.diagonal {
                Some(diag) => residual.iter().zip(diag).map(|(r, m)| r / m).collect(),
                None => {
                    let mut lambda = vec![0.0; residual.len()];
                    let scale = linalg::norm_inf(&residual);
                    if scale > 0.0 {
                        match linalg::conjugate_gradient(
                            &Normal(self),
                            &residual,
                            &mut lambda,
                            1e-14,
                            20 * residual.len() + 100,
                        ) {
                            Ok(_) => {}
                            // roundoff floor of a singular but consistent system
                            Err(Error::SolverDidNotConverge { residual, .. })
                                if residual < 1e-10 => {}
                            Err(e) => return Err(e),
                        }
                    }
                    lambda
                }
            };
            for (row, l) in self.rows.iter().zip(&lambda) {
                for &(c, a) in row {
                    u[c] -= a * l / self.class_size[c];
                }
            }
        }
        for (k, x) in w.iter_mut().enumerate() {
            *x = u[self.class_of[k]];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_average() {
        let p = AffineProjector::new(3, &[vec![0, 2]], &[], &[]).unwrap();
        let mut w = [1.0, 5.0, 3.0];
        p.project(&mut w).unwrap();
        assert_eq!(w, [2.0, 5.0, 2.0]);
    }

    #[test]
    fn disjoint_rows_shift_by_mean_violation() {
        let rows = vec![vec![(0, 1.0), (1, 1.0)], vec![(2, 1.0)]];
        let p = AffineProjector::new(3, &[], &rows, &[1.0, 2.0]).unwrap();
        assert!(p.diagonal.is_some());
        let mut w = [1.0, 2.0, 0.0];
        p.project(&mut w).unwrap();
        assert_eq!(w, [0.0, 1.0, 2.0]);
    }

    #[test]
    fn coupled_rows_satisfy_constraints() {
        // undirected triangle: each variable sits in two rows
        let rows = vec![
            vec![(0, 1.0), (1, 1.0)],
            vec![(0, 1.0), (2, 1.0)],
            vec![(1, 1.0), (2, 1.0)],
        ];
        let p = AffineProjector::new(3, &[], &rows, &[2.0, 2.0, 2.0]).unwrap();
        assert!(p.diagonal.is_none());
        let mut w = [3.0, 0.0, 1.0];
        p.project(&mut w).unwrap();
        for row in &rows {
            let s: f64 = row.iter().map(|&(k, a)| a * w[k]).sum();
            assert!((s - 2.0).abs() < 1e-12);
        }
        // the only solution is all ones
        assert!(w.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn empty_row_with_nonzero_target_is_infeasible() {
        assert!(AffineProjector::new(2, &[], &[vec![]], &[1.0]).is_err());
        assert!(AffineProjector::new(2, &[], &[vec![]], &[0.0]).is_ok());
    }
}
