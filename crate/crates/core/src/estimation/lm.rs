//! Levenberg–Marquardt least squares with a central-difference Jacobian.

const STALL_WINDOW: usize = 10;
const STALL_TOL: f64 = 1e-9;

/// Stopping rules for [`minimize`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct LmSettings {
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub x: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Sum of squares.
pub(crate) fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimizes `Σ r_i(x)²`. The residual function returns `None` where the
/// model cannot be evaluated; such trial points are rejected like uphill steps.
pub(crate) fn minimize<F>(residuals: F, x0: &[f64], settings: &LmSettings) -> Option<LmOutcome>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let k = x0.len();
    let mut x = x0.to_vec();
    let mut r = residuals(&x)?;
    let mut cost = sum_sq(&r);
    if !cost.is_finite() {
        return None;
    }
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    // costs of recent accepted steps, for the stagnation test
    let mut history: Vec<f64> = Vec::new();

    while iterations < settings.max_iter {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let Some(jac) = jacobian(&residuals, &x, &r) else {
            break;
        };
        // normal equations: A = JᵀJ, g = Jᵀr
        let mut a = vec![0.0; k * k];
        let mut g = vec![0.0; k];
        for (i, row) in jac.iter().enumerate() {
            for p in 0..k {
                g[p] += row[p] * r[i];
                for q in 0..=p {
                    a[p * k + q] += row[p] * row[q];
                }
            }
        }
        for p in 0..k {
            for q in 0..p {
                a[q * k + p] = a[p * k + q];
            }
        }
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= settings.grad_tol * cost.sqrt().max(1e-300) || gmax == 0.0 {
            converged = true;
            break;
        }

        let mut accepted = None;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for p in 0..k {
                let d = a[p * k + p].max(1e-12);
                damped[p * k + p] += lambda * d;
            }
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            if let Some(step) = cholesky_solve(&damped, &neg_g, k) {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, s)| xi + s).collect();
                if let Some(rt) = residuals(&trial) {
                    let ct = sum_sq(&rt);
                    if ct.is_finite() && ct < cost {
                        accepted = Some((trial, rt, ct, step));
                        break;
                    }
                }
            }
            lambda *= 4.0;
        }
        let Some((trial, rt, ct, step)) = accepted else {
            // no downhill step exists at any damping: a stationary point
            converged = true;
            break;
        };
        let step_norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rel_drop = (cost - ct) / cost;
        x = trial;
        r = rt;
        cost = ct;
        lambda = (lambda / 3.0).max(1e-15);
        if step_norm <= settings.step_tol * (x_norm + settings.step_tol) || rel_drop < 1e-15 {
            converged = true;
            break;
        }
        // Crawling along a flat valley or toward a bound: stop once the last
        // STALL_WINDOW steps together gained almost nothing.
        history.push(cost);
        if history.len() > STALL_WINDOW {
            let old = history[history.len() - 1 - STALL_WINDOW];
            if old - cost <= STALL_TOL * old {
                converged = true;
                break;
            }
        }
    }
    Some(LmOutcome {
        x,
        cost,
        iterations,
        converged,
    })
}

fn jacobian<F>(residuals: &F, x: &[f64], r: &[f64]) -> Option<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let k = x.len();
    let mut jac = vec![vec![0.0; k]; r.len()];
    let mut xp = x.to_vec();
    for p in 0..k {
        let h = 1e-7 * x[p].abs().max(1.0);
        xp[p] = x[p] + h;
        let up = residuals(&xp);
        xp[p] = x[p] - h;
        let down = residuals(&xp);
        xp[p] = x[p];
        let column: Vec<f64> = match (up, down) {
            (Some(u), Some(d)) => u.iter().zip(&d).map(|(a, b)| (a - b) / (2.0 * h)).collect(),
            (Some(u), None) => u.iter().zip(r).map(|(a, b)| (a - b) / h).collect(),
            (None, Some(d)) => r.iter().zip(&d).map(|(a, b)| (a - b) / h).collect(),
            (None, None) => return None,
        };
        for (row, v) in jac.iter_mut().zip(column) {
            if !v.is_finite() {
                return None;
            }
            row[p] = v;
        }
    }
    Some(jac)
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major, k×k).
pub(crate) fn cholesky_solve(a: &[f64], b: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut sum = a[i * k + j];
            for m in 0..j {
                sum -= l[i * k + m] * l[j * k + m];
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                l[i * k + i] = sum.sqrt();
            } else {
                l[i * k + j] = sum / l[j * k + j];
            }
        }
    }
    let mut y = vec![0.0; k];
    for i in 0..k {
        let mut sum = b[i];
        for m in 0..i {
            sum -= l[i * k + m] * y[m];
        }
        y[i] = sum / l[i * k + i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut sum = y[i];
        for m in i + 1..k {
            sum -= l[m * k + i] * x[m];
        }
        x[i] = sum / l[i * k + i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Minimum-norm solution of `A x = b` for symmetric positive semidefinite
/// `A`, via a Jacobi eigendecomposition. Eigenvalues below `rcond` times the
/// largest are treated as zero.
pub(crate) fn pinv_solve(a: &[f64], b: &[f64], k: usize, rcond: f64) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut v = vec![0.0; k * k];
    for i in 0..k {
        v[i * k + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * k + j].powi(2))
            .sum();
        if off < 1e-300 {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = m[p * k + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * k + q] - m[p * k + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let mrp = m[r * k + p];
                    let mrq = m[r * k + q];
                    m[r * k + p] = c * mrp - s * mrq;
                    m[r * k + q] = s * mrp + c * mrq;
                }
                for r in 0..k {
                    let mpr = m[p * k + r];
                    let mqr = m[q * k + r];
                    m[p * k + r] = c * mpr - s * mqr;
                    m[q * k + r] = s * mpr + c * mqr;
                }
                for r in 0..k {
                    let vrp = v[r * k + p];
                    let vrq = v[r * k + q];
                    v[r * k + p] = c * vrp - s * vrq;
                    v[r * k + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    let top = (0..k).map(|i| m[i * k + i].abs()).fold(0.0f64, f64::max);
    if !(top > 0.0) {
        return None;
    }
    let mut x = vec![0.0; k];
    for j in 0..k {
        let lambda = m[j * k + j];
        if lambda <= rcond * top {
            continue;
        }
        let proj: f64 = (0..k).map(|i| v[i * k + j] * b[i]).sum::<f64>() / lambda;
        for i in 0..k {
            x[i] += proj * v[i * k + j];
        }
    }
    x.iter().all(|e| e.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> LmSettings {
        LmSettings {
            grad_tol: 1e-12,
            step_tol: 1e-14,
            max_iter: 500,
        }
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| Some(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]);
        let out = minimize(f, &[-1.2, 1.0], &settings()).unwrap();
        assert!(out.converged);
        assert!(
            (out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8,
            "{:?}",
            out.x
        );
    }

    #[test]
    fn linear_fit_is_exact() {
        let ts = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.1, 4.9, 7.2];
        let f = |x: &[f64]| Some(ts.iter().zip(&ys).map(|(t, y)| x[0] + x[1] * t - y).collect());
        let out = minimize(f, &[0.0, 0.0], &settings()).unwrap();
        // closed-form OLS: slope 2.04, intercept 0.99
        assert!((out.x[1] - 2.04).abs() < 1e-9);
        assert!((out.x[0] - 0.99).abs() < 1e-9);
    }

    #[test]
    fn cholesky_small_system() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&a, &[2.0, 1.0], 2).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15);
        assert!(cholesky_solve(&[1.0, 2.0, 2.0, 1.0], &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn pinv_handles_rank_deficiency() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let x = pinv_solve(&a, &[2.0, 1.0], 2, 1e-12).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-14 && x[1].abs() < 1e-14);
        // rank one: minimum-norm solution of [1 1; 1 1] x = [2, 2] is (1, 1)
        let x = pinv_solve(&[1.0, 1.0, 1.0, 1.0], &[2.0, 2.0], 2, 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn failed_start_returns_none() {
        let f = |_: &[f64]| None;
        assert!(minimize(f, &[0.0], &settings()).is_none());
    }
}
