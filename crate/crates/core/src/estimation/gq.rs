//! General quadratic fits on the implicit form
//! `L(1−L) = a(p²−L) + bL(p−1) + c(p−L)`, which is linear in `(a, b, c)`.

use super::lm::{minimize, pinv_solve, sum_sq, LmSettings};
use super::GroupedDataset;
use crate::curves::LorenzModel;

fn design_row(u: f64, s: f64) -> ([f64; 3], f64) {
    ([u * u - s, s * (u - 1.0), u - s], s * (1.0 - s))
}

/// Residuals of the implicit form at the data points.
pub fn implicit_residuals(params: &[f64; 3], data: &GroupedDataset) -> Vec<f64> {
    data.u
        .iter()
        .zip(&data.s)
        .map(|(&u, &s)| {
            let (x, y) = design_row(u, s);
            x[0] * params[0] + x[1] * params[1] + x[2] * params[2] - y
        })
        .collect()
}

/// Residual sum of squares of the implicit form.
pub fn implicit_rss(params: &[f64; 3], data: &GroupedDataset) -> f64 {
    sum_sq(&implicit_residuals(params, data))
}

/// Ordinary least squares on the implicit form. `None` when the design is
/// identically zero.
pub fn regression(data: &GroupedDataset) -> Option<[f64; 3]> {
    let mut xtx = [0.0; 9];
    let mut xty = [0.0; 3];
    for (&u, &s) in data.u.iter().zip(&data.s) {
        let (x, y) = design_row(u, s);
        for i in 0..3 {
            xty[i] += x[i] * y;
            for j in 0..3 {
                xtx[i * 3 + j] += x[i] * x[j];
            }
        }
    }
    // The design can be rank deficient: on data with s = u² the first
    // column vanishes and a is not identified. The pseudo-inverse then
    // picks the minimum-norm coefficients.
    let sol = pinv_solve(&xtx, &xty, 3, 1e-13)?;
    Some([sol[0], sol[1], sol[2]])
}

/// The same objective minimized iteratively from generic starting points.
pub(crate) fn iterative(data: &GroupedDataset, settings: &LmSettings) -> Option<([f64; 3], f64)> {
    let starts: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [1.0, -1.0, 0.5], [0.5, 0.5, 0.5], [2.0, -2.0, -1.0]];
    let residuals = |x: &[f64]| Some(implicit_residuals(&[x[0], x[1], x[2]], data));
    starts
        .iter()
        .filter_map(|s| minimize(residuals, s, settings))
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .map(|o| ([o.x[0], o.x[1], o.x[2]], o.cost))
}

pub fn model(params: [f64; 3]) -> LorenzModel {
    LorenzModel::Gq {
        a: params[0],
        b: params[1],
        c: params[2],
    }
}
