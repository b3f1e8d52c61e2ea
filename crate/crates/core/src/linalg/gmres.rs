use super::{axpy, dot, norm2, IterStats, LinearOperator};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct GmresOptions {
    /// Krylov dimension before restart.
    pub restart: usize,
    /// Cap on the total number of Arnoldi steps.
    pub max_iters: usize,
    /// Target relative residual `||b - A x|| / ||b||`.
    pub tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            restart: 50,
            max_iters: 1000,
            tol: 1e-8,
        }
    }
}

/// Restarted GMRES with optional right Jacobi preconditioning.
///
/// `x` carries the initial guess in and the solution out. `inv_diag`, when
/// given, holds `1 / A_ii`; right preconditioning leaves the true residual
/// as the monitored quantity.
pub fn gmres(
    op: &dyn LinearOperator,
    inv_diag: Option<&[f64]>,
    b: &[f64],
    x: &mut [f64],
    opts: &GmresOptions,
) -> Result<IterStats> {
    let n = op.dim();
    if b.len() != n || x.len() != n {
        return Err(Error::DimensionMismatch {
            what: "gmres vectors",
            expected: n,
            actual: b.len().min(x.len()),
        });
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(IterStats::default());
    }
    let restart = opts.restart.max(1).min(n.max(1));
    let precondition = |v: &[f64], out: &mut [f64]| match inv_diag {
        Some(d) => {
            for ((o, vi), di) in out.iter_mut().zip(v).zip(d) {
                *o = vi * di;
            }
        }
        None => out.copy_from_slice(v),
    };

    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
    let mut h = vec![vec![0.0; restart]; restart + 1];
    let mut cs = vec![0.0; restart];
    let mut sn = vec![0.0; restart];
    let mut g = vec![0.0; restart + 1];
    let mut total = 0usize;

    loop {
        op.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm2(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol {
            return Ok(IterStats {
                iterations: total,
                residual: rel,
            });
        }
        if total >= opts.max_iters {
            return Err(Error::SolverDidNotConverge {
                iterations: total,
                residual: rel,
            });
        }

        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.fill(0.0);
        g[0] = beta;
        let mut used = 0;

        for k in 0..restart {
            precondition(&basis[k], &mut z);
            op.apply(&z, &mut w);
            // modified Gram-Schmidt, one re-orthogonalization pass
            for hcol in h.iter_mut().take(k + 2) {
                hcol[k] = 0.0;
            }
            for _ in 0..2 {
                for (j, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    h[j][k] += c;
                    axpy(-c, v, &mut w);
                }
            }
            let hnext = norm2(&w);
            h[k + 1][k] = hnext;

            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            cs[k] = c;
            sn[k] = s;
            h[k][k] = c * h[k][k] + s * h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;

            total += 1;
            used = k + 1;
            let estimate = g[k + 1].abs() / bnorm;
            if hnext <= f64::EPSILON * bnorm || estimate <= opts.tol || total >= opts.max_iters {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }

        // back substitution on the rotated Hessenberg matrix
        let mut coef = vec![0.0; used];
        for i in (0..used).rev() {
            let mut acc = g[i];
            for j in i + 1..used {
                acc -= h[i][j] * coef[j];
            }
            coef[i] = acc / h[i][i];
        }
        w.fill(0.0);
        for (c, v) in coef.iter().zip(&basis) {
            axpy(*c, v, &mut w);
        }
        precondition(&w, &mut z);
        axpy(1.0, &z, x);
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    struct Dense(DMatrix<f64>);

    impl LinearOperator for Dense {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[f64], out: &mut [f64]) {
            let y = &self.0 * nalgebra::DVector::from_column_slice(x);
            out.copy_from_slice(y.as_slice());
        }
    }

    #[test]
    fn solves_nonsymmetric_system_with_restarts() {
        let n = 30;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0
            } else {
                ((i * 7 + j * 3) % 5) as f64 * 0.1 - 0.2
            }
        });
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let op = Dense(m.clone());
        let mut x = vec![0.0; n];
        let opts = GmresOptions {
            restart: 5,
            max_iters: 500,
            tol: 1e-12,
        };
        let stats = gmres(&op, None, &b, &mut x, &opts).unwrap();
        assert!(stats.residual <= 1e-12);
        let exact = m
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&b))
            .unwrap();
        for i in 0..n {
            assert!((x[i] - exact[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let op = Dense(DMatrix::identity(3, 3));
        let mut x = vec![1.0, 2.0, 3.0];
        let stats = gmres(&op, None, &[0.0; 3], &mut x, &GmresOptions::default()).unwrap();
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn reports_non_convergence() {
        let n = 40;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else {
                1.0 / (1.0 + (i + j) as f64)
            }
        });
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let opts = GmresOptions {
            restart: 2,
            max_iters: 3,
            tol: 1e-14,
        };
        let err = gmres(&Dense(m), None, &b, &mut x, &opts).unwrap_err();
        assert!(matches!(
            err,
            Error::SolverDidNotConverge { iterations: 3, .. }
        ));
    }
}
