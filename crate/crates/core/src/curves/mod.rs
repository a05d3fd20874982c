//! Parametric Lorenz curve families.
//!
//! Every family is evaluated in a form that avoids cancellation near the
//! endpoints: `1 − (1 − x)^b` is computed as `−expm1(b·ln1p(−x))`.

mod validity;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use validity::{
    check_validity_analytic, check_validity_numeric, CheckMode, Condition, ValidityReport, Verdict, Violation,
    DEFAULT_GRID,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("p = {p} is outside {range}")]
    Domain { p: f64, range: &'static str },
    #[error("{family} expects {expected} parameters, got {got}")]
    Arity {
        family: Family,
        expected: usize,
        got: usize,
    },
    #[error("{family}: parameter {name} = {value} is not finite")]
    NonFinite {
        family: Family,
        name: &'static str,
        value: f64,
    },
    #[error("{family}: parameter constraints violated: {}", .breaches.join("; "))]
    Constraint { family: Family, breaches: Vec<String> },
    #[error("general quadratic curve undefined at p = {p} (radicand {radicand:e})")]
    NegativeRadicand { p: f64, radicand: f64 },
    #[error("unknown model family `{0}`")]
    UnknownFamily(String),
}

/// Tag of a Lorenz curve family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `p − a p^α (1−p)^β`
    KakwaniBeta,
    /// `p − a p (1−p)^β`, the α = 1 member of the beta family.
    KakwaniSpecial,
    /// `p^a [1 − (1−p)^b]`
    Ortega,
    /// `p^a [1 − (1−p^d)^b]`
    SarabiaL2,
    /// `p^{ad} [1 − (1−p s^d)^b] / [1 − (1−s^d)^b]`
    L3,
    /// General quadratic.
    Gq,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::KakwaniBeta,
        Family::KakwaniSpecial,
        Family::Ortega,
        Family::SarabiaL2,
        Family::L3,
        Family::Gq,
    ];

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::KakwaniBeta => &["a", "alpha", "beta"],
            Family::KakwaniSpecial => &["a", "beta"],
            Family::Ortega => &["a", "b"],
            Family::SarabiaL2 => &["a", "b", "d"],
            Family::L3 => &["a", "b", "d", "s"],
            Family::Gq => &["a", "b", "c"],
        }
    }

    pub fn arity(self) -> usize {
        self.param_names().len()
    }

    /// Short name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            Family::KakwaniBeta => "kakwani",
            Family::KakwaniSpecial => "kakwani1",
            Family::Ortega => "ortega",
            Family::SarabiaL2 => "l2",
            Family::L3 => "l3",
            Family::Gq => "gq",
        }
    }

    /// Whether the family has a closed-form Gini index.
    pub fn has_closed_gini(self) -> bool {
        matches!(
            self,
            Family::KakwaniSpecial | Family::Ortega | Family::SarabiaL2 | Family::L3
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for Family {
    type Err = CurveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "kakwani" | "kakwani_beta" | "beta" => Ok(Family::KakwaniBeta),
            "kakwani1" | "kakwani_special" => Ok(Family::KakwaniSpecial),
            "ortega" | "l1" => Ok(Family::Ortega),
            "l2" | "sarabia" | "sarabia_l2" => Ok(Family::SarabiaL2),
            "l3" => Ok(Family::L3),
            "gq" | "general_quadratic" => Ok(Family::Gq),
            other => Err(CurveError::UnknownFamily(other.to_string())),
        }
    }
}

/// Whether parameter-domain constraints are enforced when a model is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionMode {
    #[default]
    Constrained,
    /// Breaches are allowed; validity is certified separately.
    Diagnostic,
}

impl FromStr for ConstructionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constrained" => Ok(Self::Constrained),
            "diagnostic" => Ok(Self::Diagnostic),
            other => Err(format!("unknown mode `{other}` (expected constrained|diagnostic)")),
        }
    }
}

/// A Lorenz curve: a family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LorenzModel {
    KakwaniBeta { a: f64, alpha: f64, beta: f64 },
    KakwaniSpecial { a: f64, beta: f64 },
    Ortega { a: f64, b: f64 },
    SarabiaL2 { a: f64, b: f64, d: f64 },
    L3 { a: f64, b: f64, d: f64, s: f64 },
    Gq { a: f64, b: f64, c: f64 },
}

/// `1 − (1 − x)^b` without cancellation for small `x`.
#[inline]
pub(crate) fn one_minus_pow(x: f64, b: f64) -> f64 {
    let y = 1.0 - x;
    if 1.0 - y == x {
        // 1 − x is exact, and with y^b ≤ 3/4 the subtraction loses at most
        // two bits; this path keeps dyadic inputs exact
        let t = y.powf(b);
        if t <= 0.75 {
            return 1.0 - t;
        }
    }
    -(b * (-x).ln_1p()).exp_m1()
}

/// Coefficients of the explicit solution of the general quadratic:
/// `e = −(a+b+c+1)`, `m = b² − 4a`, `n = 2be − 4c`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GqCoefficients {
    pub b: f64,
    pub e: f64,
    pub m: f64,
    pub n: f64,
}

impl GqCoefficients {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        let e = -(a + b + c + 1.0);
        Self {
            b,
            e,
            m: b * b - 4.0 * a,
            n: 2.0 * b * e - 4.0 * c,
        }
    }

    fn radicand(&self, p: f64) -> Result<f64, CurveError> {
        let r = (self.m * p + self.n) * p + self.e * self.e;
        let scale = self.m.abs() + self.n.abs() + self.e * self.e;
        if r >= 0.0 {
            Ok(r)
        } else if r > -1e-14 * scale {
            Ok(0.0)
        } else {
            Err(CurveError::NegativeRadicand { p, radicand: r })
        }
    }
}

fn check_unit(p: f64) -> Result<(), CurveError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(CurveError::Domain { p, range: "[0, 1]" })
    }
}

fn check_open(p: f64) -> Result<(), CurveError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(CurveError::Domain { p, range: "(0, 1)" })
    }
}

/// Value, first and second derivative of `p^c`.
fn power_parts(p: f64, c: f64) -> (f64, f64, f64) {
    if c == 0.0 {
        return (1.0, 0.0, 0.0);
    }
    let h = p.powf(c);
    (h, c * h / p, c * (c - 1.0) * h / (p * p))
}

impl LorenzModel {
    /// Builds a model from a parameter slice in the order given by
    /// [`Family::param_names`].
    pub fn new(family: Family, params: &[f64], mode: ConstructionMode) -> Result<Self, CurveError> {
        if params.len() != family.arity() {
            return Err(CurveError::Arity {
                family,
                expected: family.arity(),
                got: params.len(),
            });
        }
        for (name, &value) in family.param_names().iter().zip(params) {
            if !value.is_finite() {
                return Err(CurveError::NonFinite { family, name, value });
            }
        }
        let p = params;
        let model = match family {
            Family::KakwaniBeta => LorenzModel::KakwaniBeta {
                a: p[0],
                alpha: p[1],
                beta: p[2],
            },
            Family::KakwaniSpecial => LorenzModel::KakwaniSpecial { a: p[0], beta: p[1] },
            Family::Ortega => LorenzModel::Ortega { a: p[0], b: p[1] },
            Family::SarabiaL2 => LorenzModel::SarabiaL2 {
                a: p[0],
                b: p[1],
                d: p[2],
            },
            Family::L3 => LorenzModel::L3 {
                a: p[0],
                b: p[1],
                d: p[2],
                s: p[3],
            },
            Family::Gq => LorenzModel::Gq {
                a: p[0],
                b: p[1],
                c: p[2],
            },
        };
        if mode == ConstructionMode::Constrained {
            let breaches = model.domain_breaches();
            if !breaches.is_empty() {
                return Err(CurveError::Constraint { family, breaches });
            }
        }
        Ok(model)
    }

    pub fn family(&self) -> Family {
        match self {
            LorenzModel::KakwaniBeta { .. } => Family::KakwaniBeta,
            LorenzModel::KakwaniSpecial { .. } => Family::KakwaniSpecial,
            LorenzModel::Ortega { .. } => Family::Ortega,
            LorenzModel::SarabiaL2 { .. } => Family::SarabiaL2,
            LorenzModel::L3 { .. } => Family::L3,
            LorenzModel::Gq { .. } => Family::Gq,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            LorenzModel::KakwaniBeta { a, alpha, beta } => vec![a, alpha, beta],
            LorenzModel::KakwaniSpecial { a, beta } => vec![a, beta],
            LorenzModel::Ortega { a, b } => vec![a, b],
            LorenzModel::SarabiaL2 { a, b, d } => vec![a, b, d],
            LorenzModel::L3 { a, b, d, s } => vec![a, b, d, s],
            LorenzModel::Gq { a, b, c } => vec![a, b, c],
        }
    }

    /// The curve `L(p) = p` expressed in this model's family.
    pub fn equality(family: Family) -> Self {
        match family {
            Family::KakwaniBeta => LorenzModel::KakwaniBeta {
                a: 0.0,
                alpha: 1.0,
                beta: 1.0,
            },
            Family::KakwaniSpecial => LorenzModel::KakwaniSpecial { a: 0.0, beta: 1.0 },
            Family::Ortega => LorenzModel::Ortega { a: 0.0, b: 1.0 },
            Family::SarabiaL2 => LorenzModel::SarabiaL2 { a: 0.0, b: 1.0, d: 1.0 },
            Family::L3 => LorenzModel::L3 {
                a: 0.0,
                b: 1.0,
                d: 1.0,
                s: 1.0,
            },
            // a + b = −1 makes the implicit form p(1−p) = (a+b)(p²−p);
            // c = 1 keeps e < 0 and a + c ≥ 1.
            Family::Gq => LorenzModel::Gq {
                a: 0.0,
                b: -1.0,
                c: 1.0,
            },
        }
    }

    /// Human-readable list of parameter-domain constraint breaches.
    pub fn domain_breaches(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                out.push(msg.to_string());
            }
        };
        match *self {
            LorenzModel::KakwaniBeta { a, alpha, beta } => {
                need(a >= 0.0, "a >= 0");
                need(alpha > 0.0, "alpha > 0");
                need(beta > 0.0, "beta > 0");
            }
            LorenzModel::KakwaniSpecial { a, beta } => {
                need((0.0..=1.0).contains(&a), "0 <= a <= 1");
                need(beta > 0.0 && beta <= 1.0, "0 < beta <= 1");
            }
            LorenzModel::Ortega { a, b } => {
                need(a >= 0.0, "a >= 0");
                need(b > 0.0 && b <= 1.0, "0 < b <= 1");
            }
            LorenzModel::SarabiaL2 { a, b, d } => {
                need(a >= 0.0, "a >= 0");
                need(b > 0.0 && b <= 1.0, "0 < b <= 1");
                need(d >= 1.0, "d >= 1");
            }
            LorenzModel::L3 { a, b, d, s } => {
                need(a >= 0.0, "a >= 0");
                need(b > 0.0 && b <= 1.0, "0 < b <= 1");
                need(d >= 1.0, "d >= 1");
                need(s > 0.0 && s <= 1.0, "0 < s <= 1");
            }
            LorenzModel::Gq { .. } => {}
        }
        out
    }

    /// `L(p)` for `p ∈ [0, 1]`.
    pub fn evaluate(&self, p: f64) -> Result<f64, CurveError> {
        check_unit(p)?;
        let value = match *self {
            LorenzModel::KakwaniBeta { a, alpha, beta } => {
                if p == 0.0 && alpha > 0.0 {
                    0.0
                } else if p == 1.0 && beta > 0.0 {
                    1.0
                } else {
                    p - a * p.powf(alpha) * (1.0 - p).powf(beta)
                }
            }
            LorenzModel::KakwaniSpecial { a, beta } => {
                if p == 1.0 && beta > 0.0 {
                    1.0
                } else {
                    p * ((1.0 - a) + a * one_minus_pow(p, beta))
                }
            }
            LorenzModel::Ortega { a, b } => {
                if p == 0.0 && a > -1.0 {
                    0.0
                } else if p == 1.0 && b > 0.0 {
                    1.0
                } else {
                    p.powf(a) * one_minus_pow(p, b)
                }
            }
            LorenzModel::SarabiaL2 { a, b, d } => {
                if p == 0.0 && a + d > 0.0 {
                    0.0
                } else if p == 1.0 && b > 0.0 {
                    1.0
                } else {
                    p.powf(a) * one_minus_pow(p.powf(d), b)
                }
            }
            LorenzModel::L3 { a, b, d, s } => {
                let k = s.powf(d);
                if p == 0.0 && a * d > -1.0 {
                    0.0
                } else {
                    p.powf(a * d) * one_minus_pow(k * p, b) / one_minus_pow(k, b)
                }
            }
            // at p = 1 the radicand is (a+c−1)², so L(1) = min(1, a+c)
            LorenzModel::Gq { a, c, .. } if p == 1.0 => (a + c).min(1.0),
            LorenzModel::Gq { a, b, c } => {
                let q = GqCoefficients::new(a, b, c);
                let r = q.radicand(p)?;
                if q.e < 0.0 {
                    // e + √R = p(mp + n)/(√R − e) avoids cancellation near p = 0
                    -0.5 * p * (q.b + (q.m * p + q.n) / (r.sqrt() - q.e))
                } else {
                    -0.5 * (q.b * p + q.e + r.sqrt())
                }
            }
        };
        Ok(value)
    }

    /// `L′(p)` for `p ∈ (0, 1)`. Use [`Self::slope_at_zero`] and
    /// [`Self::slope_at_one`] for the one-sided endpoint limits.
    pub fn derivative(&self, p: f64) -> Result<f64, CurveError> {
        check_open(p)?;
        self.derivative_unchecked(p)
    }

    pub(crate) fn derivative_unchecked(&self, p: f64) -> Result<f64, CurveError> {
        let v = match *self {
            LorenzModel::KakwaniBeta { a, alpha, beta } => {
                1.0 - a * p.powf(alpha - 1.0) * (1.0 - p).powf(beta - 1.0) * (alpha - (alpha + beta) * p)
            }
            LorenzModel::KakwaniSpecial { a, beta } => {
                (1.0 - a) + a * one_minus_pow(p, beta) + a * beta * p * (1.0 - p).powf(beta - 1.0)
            }
            LorenzModel::Ortega { a, b } => {
                let (h, h1, _) = power_parts(p, a);
                let g = one_minus_pow(p, b);
                let g1 = b * (1.0 - p).powf(b - 1.0);
                h1 * g + h * g1
            }
            LorenzModel::SarabiaL2 { a, b, d } => {
                let (h, h1, _) = power_parts(p, a);
                let pd = p.powf(d);
                let g = one_minus_pow(pd, b);
                let g1 = b * d * p.powf(d - 1.0) * (1.0 - pd).powf(b - 1.0);
                h1 * g + h * g1
            }
            LorenzModel::L3 { a, b, d, s } => {
                let k = s.powf(d);
                let denom = one_minus_pow(k, b);
                let (h, h1, _) = power_parts(p, a * d);
                let g = one_minus_pow(k * p, b);
                let g1 = b * k * (1.0 - k * p).powf(b - 1.0);
                (h1 * g + h * g1) / denom
            }
            LorenzModel::Gq { a, b, c } => {
                let q = GqCoefficients::new(a, b, c);
                let r = q.radicand(p)?;
                -0.5 * (q.b + (2.0 * q.m * p + q.n) / (2.0 * r.sqrt()))
            }
        };
        Ok(v)
    }

    /// `L″(p)` for `p ∈ (0, 1)`.
    pub fn second_derivative(&self, p: f64) -> Result<f64, CurveError> {
        check_open(p)?;
        self.second_derivative_unchecked(p)
    }

    pub(crate) fn second_derivative_unchecked(&self, p: f64) -> Result<f64, CurveError> {
        let v = match *self {
            LorenzModel::KakwaniBeta { a, alpha, beta } => {
                let q = 1.0 - p;
                let poly = alpha * (alpha - 1.0) * q * q - 2.0 * alpha * beta * p * q + beta * (beta - 1.0) * p * p;
                -a * p.powf(alpha - 2.0) * q.powf(beta - 2.0) * poly
            }
            LorenzModel::KakwaniSpecial { a, beta } => a * beta * (1.0 - p).powf(beta - 2.0) * (2.0 - p - beta * p),
            LorenzModel::Ortega { a, b } => {
                let (h, h1, h2) = power_parts(p, a);
                let q = 1.0 - p;
                let g = one_minus_pow(p, b);
                let g1 = b * q.powf(b - 1.0);
                let g2 = -b * (b - 1.0) * q.powf(b - 2.0);
                h2 * g + 2.0 * h1 * g1 + h * g2
            }
            LorenzModel::SarabiaL2 { a, b, d } => {
                let (h, h1, h2) = power_parts(p, a);
                let pd = p.powf(d);
                let q = 1.0 - pd;
                let g = one_minus_pow(pd, b);
                let g1 = b * d * p.powf(d - 1.0) * q.powf(b - 1.0);
                let g2 = b
                    * d
                    * ((d - 1.0) * p.powf(d - 2.0) * q.powf(b - 1.0)
                        - (b - 1.0) * d * p.powf(2.0 * d - 2.0) * q.powf(b - 2.0));
                h2 * g + 2.0 * h1 * g1 + h * g2
            }
            LorenzModel::L3 { a, b, d, s } => {
                let k = s.powf(d);
                let denom = one_minus_pow(k, b);
                let (h, h1, h2) = power_parts(p, a * d);
                let q = 1.0 - k * p;
                let g = one_minus_pow(k * p, b);
                let g1 = b * k * q.powf(b - 1.0);
                let g2 = -b * (b - 1.0) * k * k * q.powf(b - 2.0);
                (h2 * g + 2.0 * h1 * g1 + h * g2) / denom
            }
            LorenzModel::Gq { a, b, c } => {
                let q = GqCoefficients::new(a, b, c);
                let r = q.radicand(p)?;
                (q.n * q.n - 4.0 * q.m * q.e * q.e) / (8.0 * r * r.sqrt())
            }
        };
        Ok(v)
    }

    /// One-sided limit `L′(0⁺)`; may be infinite.
    pub fn slope_at_zero(&self) -> f64 {
        match *self {
            LorenzModel::KakwaniBeta { a, alpha, .. } => {
                if a == 0.0 || alpha > 1.0 {
                    1.0
                } else if alpha == 1.0 {
                    1.0 - a
                } else {
                    -a.signum() * f64::INFINITY
                }
            }
            LorenzModel::KakwaniSpecial { a, .. } => 1.0 - a,
            LorenzModel::Ortega { a, b } => power_limit_at_zero(a, b * (a + 1.0)),
            LorenzModel::SarabiaL2 { a, b, d } => power_limit_at_zero(a + d - 1.0, b * (a + d)),
            LorenzModel::L3 { a, b, d, s } => {
                let k = s.powf(d);
                power_limit_at_zero(a * d, b * k * (a * d + 1.0) / one_minus_pow(k, b))
            }
            LorenzModel::Gq { a, b, c } => {
                let q = GqCoefficients::new(a, b, c);
                gq_slope(&q, 0.0)
            }
        }
    }

    /// One-sided limit `L′(1⁻)`; infinite for several families when the
    /// shape parameter governing the upper tail is below one.
    pub fn slope_at_one(&self) -> f64 {
        match *self {
            LorenzModel::KakwaniBeta { a, beta, .. } | LorenzModel::KakwaniSpecial { a, beta } => {
                if a == 0.0 || beta > 1.0 {
                    1.0
                } else if beta == 1.0 {
                    1.0 + a
                } else {
                    a.signum() * f64::INFINITY
                }
            }
            LorenzModel::Ortega { a, b } => a + upper_tail(b, b),
            LorenzModel::SarabiaL2 { a, b, d } => a + upper_tail(b, b * d),
            LorenzModel::L3 { a, b, d, s } => {
                let k = s.powf(d);
                let tail = if k < 1.0 {
                    b * k * (1.0 - k).powf(b - 1.0)
                } else {
                    upper_tail(b, b)
                };
                a * d + tail / one_minus_pow(k, b)
            }
            LorenzModel::Gq { a, b, c } => {
                let q = GqCoefficients::new(a, b, c);
                // the radicand at 1 is exactly (a+c−1)²
                gq_slope_with(&q, 1.0, (a + c - 1.0).powi(2))
            }
        }
    }
}

/// Limit of `coef · p^exponent` as p → 0⁺.
fn power_limit_at_zero(exponent: f64, coef: f64) -> f64 {
    if exponent > 0.0 {
        0.0
    } else if exponent == 0.0 {
        coef
    } else {
        coef.signum() * f64::INFINITY
    }
}

/// Limit of `coef · (1−p)^{b−1}` as p → 1⁻.
fn upper_tail(b: f64, coef: f64) -> f64 {
    if b > 1.0 {
        0.0
    } else if b == 1.0 {
        coef
    } else {
        coef.signum() * f64::INFINITY
    }
}

fn gq_slope(q: &GqCoefficients, p: f64) -> f64 {
    gq_slope_with(q, p, ((q.m * p + q.n) * p + q.e * q.e).max(0.0))
}

fn gq_slope_with(q: &GqCoefficients, p: f64, r: f64) -> f64 {
    let lin = 2.0 * q.m * p + q.n;
    if r == 0.0 {
        if lin == 0.0 {
            return -0.5 * q.b;
        }
        return -lin.signum() * f64::INFINITY;
    }
    -0.5 * (q.b + lin / (2.0 * r.sqrt()))
}
