//! Exact projection onto `{z tied per class, C z = d, z >= l}`, optionally
//! intersected with a ball `sum_k q_k (z_k - c_k)^2 <= r^2` whose center is
//! feasible.
//!
//! In class space (`u_c` per class, sizes `G_c`) the polyhedral projection of
//! a point `x` under weights `h` is `u = max(l, x - h^{-1} C^T lambda)`, with
//! `lambda` minimizing the piecewise-quadratic dual; that is done by a
//! globalized semismooth Newton method whose systems `C D h^{-1} C^T` are
//! solved by conjugate gradients. With the ball active the solution is the
//! polyhedral projection of `((1-s) u_bar + s q c)` under weights
//! `G ((1-s) + s q)` for the `s in (0, 1)` where the ball is tight; `s` is
//! found by a bracketed secant search.

use crate::error::{Error, Result};
use crate::linalg::{self, LinearOperator};

use super::affine::AffineProjector;

#[derive(Clone, Debug)]
pub(crate) struct ClassBall {
    pub center: Vec<f64>,
    pub metric: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct PolytopeProjector {
    dim: usize,
    class_of: Vec<usize>,
    class_size: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    targets: Vec<f64>,
    /// Per class, `(row, coefficient)`.
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    ball: Option<ClassBall>,
}

/// `S (C D h^{-1} C^T + shift I) S` with the Jacobi scaling `S`.
struct Hessian<'a> {
    p: &'a PolytopeProjector,
    /// `1 / h_c` on free classes, 0 on bound ones.
    free: &'a [f64],
    shift: f64,
    scaling: Vec<f64>,
}

impl<'a> Hessian<'a> {
    fn new(p: &'a PolytopeProjector, free: &'a [f64], shift: f64) -> Self {
        let scaling = p
            .rows
            .iter()
            .map(|row| {
                let d: f64 = row.iter().map(|&(c, a)| a * a * free[c]).sum();
                1.0 / (d + shift).sqrt()
            })
            .collect();
        Self {
            p,
            free,
            shift,
            scaling,
        }
    }
}

impl LinearOperator for Hessian<'_> {
    fn dim(&self) -> usize {
        self.p.rows.len()
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let sx: Vec<f64> = x.iter().zip(&self.scaling).map(|(a, b)| a * b).collect();
        let t: Vec<f64> = self
            .p
            .cols
            .iter()
            .zip(self.free)
            .map(|(col, f)| {
                if *f == 0.0 {
                    0.0
                } else {
                    f * col.iter().map(|&(r, a)| a * sx[r]).sum::<f64>()
                }
            })
            .collect();
        for (((row, o), xr), sr) in self
            .p
            .rows
            .iter()
            .zip(out.iter_mut())
            .zip(&sx)
            .zip(&self.scaling)
        {
            *o = sr * (row.iter().map(|&(c, a)| a * t[c]).sum::<f64>() + self.shift * xr);
        }
    }
}

const NEWTON_MAX: usize = 200;

impl PolytopeProjector {
    /// `lower` and the ball are given per decision variable and must be
    /// constant on every class; `None` otherwise.
    pub(crate) fn new(
        affine: Option<&AffineProjector>,
        dim: usize,
        lower: &[f64],
        ball: Option<(&[f64], &[f64], f64)>,
    ) -> Option<Self> {
        let (class_of, class_size, rows, targets) = match affine {
            Some(a) => {
                let (c, s, r, t) = a.parts();
                (c.to_vec(), s.to_vec(), r.to_vec(), t.to_vec())
            }
            None => ((0..dim).collect(), vec![1.0; dim], Vec::new(), Vec::new()),
        };
        let classes = class_size.len();
        let per_class = |values: &[f64]| -> Option<Vec<f64>> {
            let mut out = vec![f64::NAN; classes];
            for (k, &v) in values.iter().enumerate() {
                let c = class_of[k];
                if out[c].is_nan() {
                    out[c] = v;
                } else if out[c] != v {
                    return None;
                }
            }
            Some(out)
        };
        let lower = per_class(lower)?;
        let ball = match ball {
            Some((center, metric, radius)) => {
                let scale = center.iter().fold(1.0f64, |s, v| s.max(v.abs()));
                let mut c = vec![0.0; classes];
                for (k, &v) in center.iter().enumerate() {
                    c[class_of[k]] += v / class_size[class_of[k]];
                }
                let tied = center
                    .iter()
                    .enumerate()
                    .all(|(k, v)| (v - c[class_of[k]]).abs() <= 1e-12 * scale);
                let inside = c.iter().zip(&lower).all(|(x, l)| *x >= *l);
                let on_rows = rows.iter().zip(&targets).all(|(row, d)| {
                    let s: f64 = row.iter().map(|&(cl, a)| a * c[cl]).sum();
                    (s - d).abs() <= 1e-10 * scale * (1.0 + row.len() as f64)
                });
                if !(tied && inside && on_rows) {
                    return None;
                }
                Some(ClassBall {
                    center: c,
                    metric: per_class(metric)?,
                    radius,
                })
            }
            None => None,
        };
        let mut cols = vec![Vec::new(); classes];
        for (r, row) in rows.iter().enumerate() {
            for &(c, a) in row {
                cols[c].push((r, a));
            }
        }
        Some(Self {
            dim,
            class_of,
            class_size,
            rows,
            targets,
            cols,
            lower,
            ball,
        })
    }

    pub(crate) fn project(&self, w: &mut [f64]) -> Result<()> {
        debug_assert_eq!(w.len(), self.dim);
        let classes = self.class_size.len();
        let mut mean = vec![0.0; classes];
        for (k, x) in w.iter().enumerate() {
            mean[self.class_of[k]] += x;
        }
        for (m, g) in mean.iter_mut().zip(&self.class_size) {
            *m /= g;
        }
        let mut lambda = vec![0.0; self.rows.len()];
        let mut u = self.polyhedral(&mean, &self.class_size, &mut lambda)?;
        if let Some(ball) = &self.ball {
            let excess = |u: &[f64]| -> f64 { self.ball_norm(ball, u) - ball.radius };
            let mut f_lo = excess(&u);
            if f_lo > 0.0 {
                let at = |s: f64, lambda: &mut Vec<f64>| -> Result<Vec<f64>> {
                    let mut x = vec![0.0; classes];
                    let mut h = vec![0.0; classes];
                    for c in 0..classes {
                        let g = self.class_size[c];
                        let q = ball.metric[c];
                        h[c] = g * ((1.0 - s) + s * q);
                        x[c] = g * ((1.0 - s) * mean[c] + s * q * ball.center[c]) / h[c];
                    }
                    self.polyhedral(&x, &h, lambda)
                };
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                let mut f_hi = -ball.radius;
                u = ball.center.clone();
                // Illinois variant of regula falsi on the monotone excess
                let mut side = 0i8;
                for _ in 0..200 {
                    let mut s = hi - f_hi * (hi - lo) / (f_hi - f_lo);
                    if !(s > lo && s < hi) {
                        s = 0.5 * (lo + hi);
                    }
                    let cand = at(s, &mut lambda)?;
                    let f = excess(&cand);
                    if f.abs() <= 1e-13 * ball.radius {
                        u = cand;
                        break;
                    }
                    if f > 0.0 {
                        lo = s;
                        f_lo = f;
                        if side == -1 {
                            f_hi *= 0.5;
                        }
                        side = -1;
                    } else {
                        hi = s;
                        f_hi = f;
                        u = cand;
                        if side == 1 {
                            f_lo *= 0.5;
                        }
                        side = 1;
                    }
                    if hi - lo <= 1e-16 {
                        break;
                    }
                }
            }
        }
        for (k, x) in w.iter_mut().enumerate() {
            *x = u[self.class_of[k]];
        }
        Ok(())
    }

    fn ball_norm(&self, ball: &ClassBall, u: &[f64]) -> f64 {
        u.iter()
            .zip(&ball.center)
            .zip(&ball.metric)
            .zip(&self.class_size)
            .map(|(((x, c), q), g)| g * q * (x - c) * (x - c))
            .sum::<f64>()
            .sqrt()
    }

    /// Minimizer of `1/2 sum_c h_c (u_c - x_c)^2` over `C u = d, u >= l`,
    /// warm-started from (and updating) the multipliers `lambda`.
    fn polyhedral(&self, x: &[f64], h: &[f64], lambda: &mut Vec<f64>) -> Result<Vec<f64>> {
        let primal = |lambda: &[f64], u: &mut [f64], free: &mut [f64]| {
            for c in 0..x.len() {
                let g: f64 = self.cols[c].iter().map(|&(r, a)| a * lambda[r]).sum();
                let v = x[c] - g / h[c];
                if v > self.lower[c] {
                    u[c] = v;
                    free[c] = 1.0 / h[c];
                } else {
                    u[c] = self.lower[c];
                    free[c] = 0.0;
                }
            }
        };
        let residual = |u: &[f64]| -> Vec<f64> {
            self.rows
                .iter()
                .zip(&self.targets)
                .map(|(row, d)| row.iter().map(|&(c, a)| a * u[c]).sum::<f64>() - d)
                .collect()
        };
        // negated dual function, minimized over lambda
        let theta = |lambda: &[f64], u: &[f64], res: &[f64]| -> f64 {
            let q: f64 = u
                .iter()
                .zip(x)
                .zip(h)
                .map(|((u, x), h)| h * (u - x) * (u - x))
                .sum();
            -(0.5 * q + linalg::dot(lambda, res))
        };

        let mut u = vec![0.0; x.len()];
        let mut free = vec![0.0; x.len()];
        primal(lambda, &mut u, &mut free);
        if self.rows.is_empty() {
            return Ok(u);
        }
        let scale = 1.0
            + linalg::norm_inf(&self.targets)
            + linalg::norm_inf(x) * self.rows.iter().map(|r| r.len()).max().unwrap_or(0) as f64;
        let tol = 1e-12 * scale;
        let mut res = residual(&u);
        let mut th = theta(lambda, &u, &res);
        let diag_scale = h.iter().fold(0.0f64, |m, v| m.max(1.0 / v));
        let mut trial_u = vec![0.0; x.len()];
        let mut trial_free = vec![0.0; x.len()];
        for _ in 0..NEWTON_MAX {
            if linalg::norm_inf(&res) <= tol {
                return Ok(u);
            }
            let op = Hessian::new(self, &free, 1e-10 * diag_scale);
            let rhs: Vec<f64> = res.iter().zip(&op.scaling).map(|(r, s)| r * s).collect();
            let forcing = (linalg::norm_inf(&res) / scale).sqrt().clamp(1e-12, 1e-2);
            let mut step = vec![0.0; res.len()];
            let cg =
                linalg::conjugate_gradient(&op, &rhs, &mut step, forcing, 10 * res.len() + 100);
            for (st, s) in step.iter_mut().zip(&op.scaling) {
                *st *= s;
            }
            match cg {
                Ok(_) | Err(Error::SolverDidNotConverge { .. }) => {}
                Err(e) => return Err(e),
            }
            let slope = -linalg::dot(&res, &step);
            let mut t = 1.0;
            let mut trial = lambda.clone();
            let mut accepted = false;
            for _ in 0..60 {
                for ((l, base), s) in trial.iter_mut().zip(lambda.iter()).zip(&step) {
                    *l = base + t * s;
                }
                primal(&trial, &mut trial_u, &mut trial_free);
                let trial_res = residual(&trial_u);
                let trial_th = theta(&trial, &trial_u, &trial_res);
                if trial_th <= th + 1e-4 * t * slope + 1e-15 * th.abs() {
                    std::mem::swap(lambda, &mut trial);
                    std::mem::swap(&mut u, &mut trial_u);
                    std::mem::swap(&mut free, &mut trial_free);
                    res = trial_res;
                    th = trial_th;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if linalg::norm_inf(&res) <= tol.max(1e-10 * scale) {
            return Ok(u);
        }
        Err(Error::Infeasible(format!(
            "degree rows cannot be met within the bounds (residual {:.3e})",
            linalg::norm_inf(&res)
        )))
    }
}
