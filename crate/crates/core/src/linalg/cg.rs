use super::{axpy, dot, norm2, IterStats, LinearOperator};
use crate::error::{Error, Result};

/// Conjugate gradients for symmetric positive (semi-)definite operators.
///
/// Stops when `||b - A x|| <= tol * ||b||`; `x` is the initial guess.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iters: usize,
) -> Result<IterStats> {
    let n = op.dim();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(IterStats::default());
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 0..max_iters {
        if rr.sqrt() <= tol * bnorm {
            return Ok(IterStats {
                iterations: it,
                residual: rr.sqrt() / bnorm,
            });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    let residual = rr.sqrt() / bnorm;
    if residual <= tol {
        Ok(IterStats {
            iterations: max_iters,
            residual,
        })
    } else {
        Err(Error::SolverDidNotConverge {
            iterations: max_iters,
            residual,
        })
    }
}
