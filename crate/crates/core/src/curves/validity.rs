//! Validity certification: is a parameterized curve a genuine Lorenz curve?
//!
//! A genuine curve satisfies `L(0) = 0`, `L(1) = 1`, `L′(0⁺) ≥ 0` and
//! `L″ ≥ 0` on `(0, 1)`. The analytic check uses known parameter-region
//! results per family; the numeric check evaluates the curve on a grid.

use serde::{Deserialize, Serialize};

use super::{GqCoefficients, LorenzModel};

/// Default number of uniform grid points for the numeric check.
pub const DEFAULT_GRID: usize = 10_001;

const VALUE_TOL: f64 = 1e-10;
const SLOPE_TOL: f64 = 1e-10;
const CURVATURE_TOL: f64 = 1e-10;
const NEGATIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Genuine,
    NotGenuine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    Analytic,
    Numeric,
}

/// The condition a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `L(0) ≠ 0`
    ZeroAtOrigin,
    /// `L(1) ≠ 1`
    OneAtOne,
    /// `L′(0⁺) < 0`
    NegativeSlopeAtZero,
    /// `L″ < 0` somewhere in `(0, 1)`
    NonConvex,
    /// `L < 0` somewhere in `(0, 1)`
    NegativeValue,
    /// Parameters outside the family's admissible region.
    ParameterDomain,
    /// The curve is not real-valued somewhere in `[0, 1]`.
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    /// Abscissa of the first observed breach, when it has a location.
    pub at: Option<f64>,
    pub detail: String,
}

impl Violation {
    fn new(condition: Condition, at: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            condition,
            at,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub verdict: Verdict,
    pub mode: CheckMode,
    pub violations: Vec<Violation>,
    pub first_violation: Option<f64>,
    /// Minimum of `L` over the numeric grid.
    pub min_value: Option<f64>,
    pub min_at: Option<f64>,
    /// First and last grid abscissae where `L < 0`.
    pub negative_region: Option<(f64, f64)>,
}

impl ValidityReport {
    fn from_violations(mode: CheckMode, violations: Vec<Violation>) -> Self {
        let verdict = if violations.is_empty() {
            Verdict::Genuine
        } else {
            Verdict::NotGenuine
        };
        let first_violation = violations.iter().filter_map(|v| v.at).min_by(f64::total_cmp);
        Self {
            verdict,
            mode,
            violations,
            first_violation,
            min_value: None,
            min_at: None,
            negative_region: None,
        }
    }

    pub fn is_genuine(&self) -> bool {
        self.verdict == Verdict::Genuine
    }

    pub fn has(&self, condition: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }
}

/// Certifies validity from the parameter values alone.
pub fn check_validity_analytic(model: &LorenzModel) -> ValidityReport {
    let mut out = Vec::new();
    match *model {
        LorenzModel::KakwaniBeta { a, alpha, beta } => kakwani_beta(a, alpha, beta, &mut out),
        LorenzModel::KakwaniSpecial { a, beta } => {
            if a > 1.0 {
                out.push(Violation::new(
                    Condition::NegativeSlopeAtZero,
                    Some(0.0),
                    format!("L'(0+) = 1 - a = {}", 1.0 - a),
                ));
            }
            if a < 0.0 {
                out.push(Violation::new(Condition::NonConvex, None, "a < 0 makes L'' negative"));
            }
            if beta > 1.0 && a > 0.0 {
                out.push(Violation::new(
                    Condition::NonConvex,
                    Some(1.0),
                    "beta > 1 makes L'' negative near p = 1",
                ));
            }
            if !(beta > 0.0) && a != 0.0 {
                out.push(Violation::new(Condition::OneAtOne, Some(1.0), "beta <= 0"));
            }
        }
        LorenzModel::Gq { a, b, c } => gq(a, b, c, &mut out),
        LorenzModel::Ortega { .. } | LorenzModel::SarabiaL2 { .. } | LorenzModel::L3 { .. } => {}
    }
    let breaches = model.domain_breaches();
    if !breaches.is_empty() && !(matches!(model, LorenzModel::KakwaniBeta { a, .. } if *a == 0.0)) {
        out.push(Violation::new(Condition::ParameterDomain, None, breaches.join("; ")));
    }
    ValidityReport::from_violations(CheckMode::Analytic, out)
}

fn kakwani_beta(a: f64, alpha: f64, beta: f64, out: &mut Vec<Violation>) {
    // a = 0 is the equality line whatever the exponents.
    if a == 0.0 {
        return;
    }
    if !(alpha > 0.0) {
        out.push(Violation::new(Condition::ZeroAtOrigin, Some(0.0), "alpha <= 0"));
    }
    if !(beta > 0.0) {
        out.push(Violation::new(Condition::OneAtOne, Some(1.0), "beta <= 0"));
    }
    if a < 0.0 || !(alpha > 0.0 && beta > 0.0) {
        return;
    }
    if alpha < 1.0 {
        out.push(Violation::new(
            Condition::NegativeSlopeAtZero,
            Some(0.0),
            "alpha < 1 sends L'(0+) to -infinity",
        ));
        out.push(Violation::new(
            Condition::NegativeValue,
            Some(0.0),
            "alpha < 1 makes L negative near p = 0",
        ));
    } else if alpha > 1.0 {
        out.push(Violation::new(
            Condition::NonConvex,
            Some(0.0),
            "alpha > 1 makes L'' negative near p = 0",
        ));
    } else if a > 1.0 {
        out.push(Violation::new(
            Condition::NegativeSlopeAtZero,
            Some(0.0),
            format!("alpha = 1 with a > 1 gives L'(0+) = {}", 1.0 - a),
        ));
        out.push(Violation::new(
            Condition::NegativeValue,
            Some(0.0),
            "alpha = 1 with a > 1 makes L negative near p = 0",
        ));
    }
    if beta > 1.0 {
        out.push(Violation::new(
            Condition::NonConvex,
            Some(1.0),
            "beta > 1 makes L'' negative near p = 1",
        ));
    }
}

fn gq(a: f64, b: f64, c: f64, out: &mut Vec<Violation>) {
    let q = GqCoefficients::new(a, b, c);
    if !(q.e < 0.0) {
        out.push(Violation::new(
            Condition::ZeroAtOrigin,
            Some(0.0),
            format!("e = -(a+b+c+1) = {} is not negative", q.e),
        ));
    }
    if a + c < 1.0 {
        out.push(Violation::new(
            Condition::OneAtOne,
            Some(1.0),
            format!("a + c = {} < 1", a + c),
        ));
    }
    if c < 0.0 {
        out.push(Violation::new(
            Condition::NegativeSlopeAtZero,
            Some(0.0),
            format!("c = {c} < 0"),
        ));
    }
    if q.m > 0.0 {
        let e2 = q.e * q.e;
        // With m > 0 the radicand is a convex parabola in p; L'' has the
        // sign of n² − 4me² wherever it is defined.
        if q.m * 4.0 * e2 > q.n * q.n {
            out.push(Violation::new(
                Condition::NonConvex,
                None,
                format!("m = {} exceeds n^2/(4e^2) = {}", q.m, q.n * q.n / (4.0 * e2)),
            ));
        } else if q.n < 0.0 && q.m > -q.n / 2.0 {
            let vertex = -q.n / (2.0 * q.m);
            out.push(Violation::new(
                Condition::Undefined,
                Some(vertex),
                "radicand m p^2 + n p + e^2 is negative inside (0, 1)",
            ));
        }
    }
}

/// Pointwise check on a uniform grid of `grid_size` points (at least 100)
/// plus log-spaced probes towards both endpoints.
pub fn check_validity_numeric(model: &LorenzModel, grid_size: usize) -> ValidityReport {
    let n = grid_size.max(100);
    let mut out = Vec::new();

    match model.evaluate(0.0) {
        Ok(v) if v.abs() <= VALUE_TOL => {}
        Ok(v) => out.push(Violation::new(
            Condition::ZeroAtOrigin,
            Some(0.0),
            format!("L(0) = {v}"),
        )),
        Err(e) => out.push(Violation::new(Condition::Undefined, Some(0.0), e.to_string())),
    }
    match model.evaluate(1.0) {
        Ok(v) if (v - 1.0).abs() <= VALUE_TOL => {}
        Ok(v) => out.push(Violation::new(Condition::OneAtOne, Some(1.0), format!("L(1) = {v}"))),
        Err(e) => out.push(Violation::new(Condition::Undefined, Some(1.0), e.to_string())),
    }

    // Slope at the origin: the one-sided limit plus probes deep towards 0.
    let mut worst_slope: Option<(f64, f64)> = None;
    let limit = model.slope_at_zero();
    if limit < -SLOPE_TOL {
        worst_slope = Some((0.0, limit));
    }
    for k in 4..=300 {
        let p = 10f64.powi(-k);
        if let Ok(d) = model.derivative_unchecked(p) {
            if d < -SLOPE_TOL && worst_slope.is_none_or(|(_, w)| d < w) {
                worst_slope = Some((p, d));
            }
        }
    }
    if let Some((p, d)) = worst_slope {
        out.push(Violation::new(
            Condition::NegativeSlopeAtZero,
            Some(p),
            format!("L'({p:e}) = {d:e}"),
        ));
    }

    let mut points: Vec<f64> = (1..n - 1).map(|i| i as f64 / (n - 1) as f64).collect();
    for k in 4..=15 {
        let t = 10f64.powi(-k);
        points.push(t);
        points.push(1.0 - t);
    }
    points.push(1.0 - f64::EPSILON);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut min_value = (f64::INFINITY, 0.0);
    let mut negative: Option<(f64, f64)> = None;
    let mut non_convex: Option<(f64, f64)> = None;
    let mut undefined: Option<(f64, String)> = None;
    for &p in &points {
        match model.evaluate(p) {
            Ok(v) if v.is_finite() => {
                if v < min_value.0 {
                    min_value = (v, p);
                }
                if v < -NEGATIVE_TOL {
                    negative = Some(match negative {
                        None => (p, p),
                        Some((lo, _)) => (lo, p),
                    });
                }
            }
            Ok(v) => {
                undefined.get_or_insert((p, format!("L = {v}")));
            }
            Err(e) => {
                undefined.get_or_insert((p, e.to_string()));
            }
        }
        match model.second_derivative_unchecked(p) {
            Ok(c) if c.is_nan() => {
                undefined.get_or_insert((p, "L'' is NaN".to_string()));
            }
            Ok(c) if c < -CURVATURE_TOL => {
                non_convex.get_or_insert((p, c));
            }
            Ok(_) => {}
            Err(e) => {
                undefined.get_or_insert((p, e.to_string()));
            }
        }
    }
    if let Some((lo, hi)) = negative {
        out.push(Violation::new(
            Condition::NegativeValue,
            Some(lo),
            format!("L < 0 on [{lo}, {hi}], minimum {} at {}", min_value.0, min_value.1),
        ));
    }
    if let Some((p, c)) = non_convex {
        out.push(Violation::new(
            Condition::NonConvex,
            Some(p),
            format!("L''({p}) = {c:e}"),
        ));
    }
    if let Some((p, msg)) = undefined {
        out.push(Violation::new(Condition::Undefined, Some(p), msg));
    }

    let mut report = ValidityReport::from_violations(CheckMode::Numeric, out);
    if min_value.0.is_finite() {
        report.min_value = Some(min_value.0);
        report.min_at = Some(min_value.1);
    }
    report.negative_region = negative;
    report
}
