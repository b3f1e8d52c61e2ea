//! Exact Euclidean projections onto the single sets.

/// Elementwise `max(w, lower)`.
pub fn project_lower(w: &mut [f64], lower: &[f64]) {
    for (x, l) in w.iter_mut().zip(lower) {
        if *x < *l {
            *x = *l;
        }
    }
}

/// Projection onto `{z >= 0, sum_{k in S} z_k <= b}`.
///
/// Coordinates outside `S` are only clipped. Inside `S`, if the clipped point
/// already meets the budget it is the answer; otherwise the answer is the
/// projection onto the simplex face `sum = b`, found by the sorted-threshold
/// rule `z_k = max(w_k - tau, 0)`.
pub fn project_budget_nonneg(w: &[f64], subset: &[usize], b: f64) -> Vec<f64> {
    let zeros = vec![0.0; w.len()];
    project_budget_lower(w, subset, b, &zeros)
}

/// As [`project_budget_nonneg`] with per-coordinate lower bounds `l`, i.e.
/// onto `{z >= l, sum_S z <= b}`. Requires `sum_S l <= b`.
pub fn project_budget_lower(w: &[f64], subset: &[usize], b: f64, lower: &[f64]) -> Vec<f64> {
    let mut z = w.to_vec();
    project_lower(&mut z, lower);
    let used: f64 = subset.iter().map(|&k| z[k]).sum();
    if used <= b {
        return z;
    }
    // shift so the bounds become zero: project (w - l)_S onto the simplex
    // of mass b - sum l
    let mass = b - subset.iter().map(|&k| lower[k]).sum::<f64>();
    let shifted: Vec<f64> = subset.iter().map(|&k| w[k] - lower[k]).collect();
    let tau = simplex_threshold(&shifted, mass.max(0.0));
    for (&k, &x) in subset.iter().zip(&shifted) {
        z[k] = lower[k] + (x - tau).max(0.0);
    }
    z
}

/// The `tau` with `sum max(x_k - tau, 0) = mass`, for `mass >= 0` and
/// `sum max(x_k, 0) > mass`.
fn simplex_threshold(x: &[f64], mass: f64) -> f64 {
    let mut sorted: Vec<f64> = x.iter().copied().filter(|v| *v > 0.0).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if mass <= 0.0 {
        return sorted.first().copied().unwrap_or(0.0).max(0.0);
    }
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (r, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - mass) / (r + 1) as f64;
        if v > t {
            tau = t;
        } else {
            break;
        }
    }
    tau
}

/// Projection onto one halfspace `{z : sum_S z <= b}`.
pub fn project_halfspace(w: &mut [f64], subset: &[usize], b: f64) {
    let used: f64 = subset.iter().map(|&k| w[k]).sum();
    if used > b && !subset.is_empty() {
        let shift = (used - b) / subset.len() as f64;
        for &k in subset {
            w[k] -= shift;
        }
    }
}

/// Projection onto `{z : sum_k q_k (z_k - c_k)^2 <= rho^2}` with `q_k > 0`.
///
/// The minimizer is `z_k - c_k = (w_k - c_k) / (1 + mu q_k)` for the `mu >= 0`
/// that puts it on the boundary; `mu` solves a convex decreasing scalar
/// equation, which Newton's method approaches monotonically from `mu = 0`.
pub fn project_ellipsoid(w: &mut [f64], center: &[f64], q: &[f64], radius: f64) {
    let size: f64 = w
        .iter()
        .zip(center)
        .zip(q)
        .map(|((x, c), qk)| qk * (x - c) * (x - c))
        .sum();
    if size <= radius * radius {
        return;
    }
    if radius <= 0.0 {
        w.copy_from_slice(center);
        return;
    }
    if let Some(q0) = q.first() {
        if q.iter().all(|v| v == q0) {
            let scale = radius / size.sqrt();
            for (x, c) in w.iter_mut().zip(center) {
                *x = c + scale * (*x - c);
            }
            return;
        }
    }
    let r2 = radius * radius;
    let mut mu = 0.0f64;
    for _ in 0..200 {
        let mut f = -r2;
        let mut df = 0.0;
        for ((x, c), qk) in w.iter().zip(center).zip(q) {
            let d = x - c;
            let t = 1.0 + mu * qk;
            f += qk * d * d / (t * t);
            df -= 2.0 * qk * qk * d * d / (t * t * t);
        }
        if f <= r2 * 1e-15 || df == 0.0 {
            break;
        }
        let next = mu - f / df;
        if next <= mu * (1.0 + 1e-16) {
            break;
        }
        mu = next;
    }
    for ((x, c), qk) in w.iter_mut().zip(center).zip(q) {
        *x = c + (*x - c) / (1.0 + mu * qk);
    }
    // Newton stops a hair outside; pull onto the boundary.
    let size: f64 = w
        .iter()
        .zip(center)
        .zip(q)
        .map(|((x, c), qk)| qk * (x - c) * (x - c))
        .sum();
    if size > r2 {
        let scale = radius / size.sqrt();
        for (x, c) in w.iter_mut().zip(center) {
            *x = c + scale * (*x - c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn budget_examples() {
        assert!(close(
            &project_budget_nonneg(&[0.2, 0.3], &[0, 1], 1.0),
            &[0.2, 0.3]
        ));
        assert!(close(
            &project_budget_nonneg(&[2.0, 0.0], &[0, 1], 1.0),
            &[1.0, 0.0]
        ));
        assert!(close(
            &project_budget_nonneg(&[0.5, 0.7], &[0, 1], 1.0),
            &[0.4, 0.6]
        ));
        assert!(close(
            &project_budget_nonneg(&[-1.0, 2.0], &[0, 1], 5.0),
            &[0.0, 2.0]
        ));
        assert!(close(
            &project_budget_nonneg(&[0.5, 0.7], &[0, 1], 0.0),
            &[0.0, 0.0]
        ));
    }

    #[test]
    fn budget_ignores_coordinates_outside_subset() {
        let z = project_budget_nonneg(&[0.5, 0.7, 3.0, -1.0], &[0, 1], 1.0);
        assert!(close(&z, &[0.4, 0.6, 3.0, 0.0]));
    }

    #[test]
    fn budget_with_lower_bounds() {
        let z = project_budget_lower(&[0.5, 0.7], &[0, 1], 1.0, &[0.3, 0.0]);
        // shift (0.2, 0.7) onto mass 0.7: tau = 0.1
        assert!(close(&z, &[0.4, 0.6]));
        let z = project_budget_lower(&[0.0, 2.0], &[0, 1], 1.0, &[0.3, 0.0]);
        assert!(close(&z, &[0.3, 0.7]));
    }

    #[test]
    fn halfspace() {
        let mut w = [1.0, 1.0, 5.0];
        project_halfspace(&mut w, &[0, 1], 1.0);
        assert!(close(&w, &[0.5, 0.5, 5.0]));
    }

    #[test]
    fn toy_ball() {
        let c = [1.0];
        let q = [2.0];
        let rho = 0.2 * 2f64.sqrt();
        let mut hi = [1.5];
        project_ellipsoid(&mut hi, &c, &q, rho);
        assert!((hi[0] - 1.2).abs() < 1e-12);
        let mut lo = [0.5];
        project_ellipsoid(&mut lo, &c, &q, rho);
        assert!((lo[0] - 0.8).abs() < 1e-12);
        let mut inside = [1.1];
        project_ellipsoid(&mut inside, &c, &q, rho);
        assert_eq!(inside, [1.1]);
    }

    #[test]
    fn ellipsoid_kkt() {
        let c = [0.5, 1.0, 0.0];
        let q = [1.0, 2.0, 4.0];
        let w0 = [3.0, -1.0, 2.0];
        let mut z = w0;
        project_ellipsoid(&mut z, &c, &q, 0.5);
        let size: f64 = (0..3).map(|k| q[k] * (z[k] - c[k]).powi(2)).sum();
        assert!((size - 0.25).abs() < 1e-12);
        // w - z is parallel to the ellipsoid normal q (z - c)
        let ratios: Vec<f64> = (0..3)
            .map(|k| (w0[k] - z[k]) / (q[k] * (z[k] - c[k])))
            .collect();
        assert!(ratios[0] > 0.0);
        assert!((ratios[0] - ratios[1]).abs() < 1e-9 && (ratios[0] - ratios[2]).abs() < 1e-9);
    }
}
