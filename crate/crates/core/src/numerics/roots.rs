//! Bracketed root finding (Brent's method).

use serde::{Deserialize, Serialize};

use super::NumericsError;

const MAX_ITER: usize = 200;
const PRESCAN_POINTS: usize = 64;

/// Search interval inside `[0, 1]` for [`find_root`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self, NumericsError> {
        Self::with_tol(lo, hi, 1e-12)
    }

    pub fn with_tol(lo: f64, hi: f64, tol: f64) -> Result<Self, NumericsError> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || !(lo < hi) || !(tol > 0.0) {
            return Err(NumericsError::Domain {
                function: "find_root",
                detail: format!("invalid bracket [{lo}, {hi}] with tol {tol}"),
            });
        }
        Ok(Self { lo, hi, tol })
    }
}

/// Root of `f` in the bracket.
///
/// If the endpoint values do not differ in sign the bracket is pre-scanned
/// on a uniform grid for the first sign change.
pub fn find_root<F: Fn(f64) -> f64>(f: F, bracket: RootBracket) -> Result<f64, NumericsError> {
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa * fb < 0.0) {
        let (lo, hi, flo, fhi) = prescan(&f, a, b)?;
        a = lo;
        b = hi;
        fa = flo;
        fb = fhi;
        if fa == 0.0 {
            return Ok(a);
        }
    }
    brent(&f, a, b, fa, fb, bracket.tol)
}

fn prescan<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<(f64, f64, f64, f64), NumericsError> {
    let step = (hi - lo) / PRESCAN_POINTS as f64;
    let mut prev_x = lo;
    let mut prev_f = f(lo);
    for i in 1..=PRESCAN_POINTS {
        let x = if i == PRESCAN_POINTS { hi } else { lo + step * i as f64 };
        let fx = f(x);
        if prev_f.is_finite() && fx.is_finite() && (prev_f * fx <= 0.0) {
            return Ok((prev_x, x, prev_f, fx));
        }
        prev_x = x;
        prev_f = fx;
    }
    Err(NumericsError::NoSignChange { lo, hi })
}

fn brent<F: Fn(f64) -> f64>(
    f: &F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    tol: f64,
) -> Result<f64, NumericsError> {
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(NumericsError::Domain {
                function: "find_root",
                detail: format!("objective is not finite at {b}"),
            });
        }
    }
    Err(NumericsError::ToleranceNotReached { best: b, residual: fb })
}
