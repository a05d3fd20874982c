//! Inequality and poverty measures derived from a Lorenz model.
//!
//! Poverty measures work through the quantile function `Q(p) = μ L′(p)`:
//! the headcount `H` solves `Q(H) = z`, and
//! `FGTα = ∫₀^H (1 − Q/z)^α dp`, `W = ∫₀^H ln(z/Q) dp`, `MLD = −∫₀¹ ln L′ dp`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{check_validity_analytic, one_minus_pow, CurveError, Family, LorenzModel};
use crate::numerics::{beta_fn, find_root, hyp2f1_minus_one, integrate, NumericsError, QuadratureSpec, RootBracket};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("{what} has no closed form for the {family} family")]
    Unsupported { family: Family, what: &'static str },
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("quantile function decreases near p = {at}; the curve is not convex")]
    NonMonotoneQuantile { at: f64 },
    #[error("curve takes negative values near p = {at} (L = {value:e}); measure undefined")]
    NegativeCurve { at: f64, value: f64 },
    #[error("integral did not converge: {0}")]
    Divergent(NumericsError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Mean income and poverty line, both in currency units per person-day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconomicContext {
    pub mean: f64,
    pub poverty_line: f64,
}

impl EconomicContext {
    pub fn new(mean: f64, poverty_line: f64) -> Result<Self, MeasureError> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(MeasureError::Domain(format!(
                "mean income must be positive, got {mean}"
            )));
        }
        if !(poverty_line > 0.0 && poverty_line.is_finite()) {
            return Err(MeasureError::Domain(format!(
                "poverty line must be positive, got {poverty_line}"
            )));
        }
        Ok(Self { mean, poverty_line })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
}

/// One measure of a [`MeasureSet`]: a value or the reason it is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub value: Option<f64>,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl MeasureValue {
    fn from_result(r: Result<f64, MeasureError>, method: Method) -> Self {
        match r {
            Ok(v) => Self {
                value: Some(v),
                method,
                error: None,
            },
            Err(e) => Self {
                value: None,
                method,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Headcount,
    PovertyGap,
    PovertySeverity,
    Watts,
    Gini,
    Mld,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 6] = [
        MeasureKind::Headcount,
        MeasureKind::PovertyGap,
        MeasureKind::PovertySeverity,
        MeasureKind::Watts,
        MeasureKind::Gini,
        MeasureKind::Mld,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Headcount => "headcount",
            MeasureKind::PovertyGap => "poverty_gap",
            MeasureKind::PovertySeverity => "poverty_severity",
            MeasureKind::Watts => "watts",
            MeasureKind::Gini => "gini",
            MeasureKind::Mld => "mld",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSet {
    pub headcount: MeasureValue,
    pub poverty_gap: MeasureValue,
    pub poverty_severity: MeasureValue,
    pub watts: MeasureValue,
    pub gini: MeasureValue,
    pub mld: MeasureValue,
}

impl MeasureSet {
    pub fn get(&self, kind: MeasureKind) -> &MeasureValue {
        match kind {
            MeasureKind::Headcount => &self.headcount,
            MeasureKind::PovertyGap => &self.poverty_gap,
            MeasureKind::PovertySeverity => &self.poverty_severity,
            MeasureKind::Watts => &self.watts,
            MeasureKind::Gini => &self.gini,
            MeasureKind::Mld => &self.mld,
        }
    }

    pub fn value(&self, kind: MeasureKind) -> Option<f64> {
        self.get(kind).value
    }

    /// All six values, or the first missing measure and its error.
    pub fn values(&self) -> Result<[f64; 6], (MeasureKind, String)> {
        let mut out = [0.0; 6];
        for (slot, kind) in out.iter_mut().zip(MeasureKind::ALL) {
            let m = self.get(kind);
            *slot = m.value.ok_or_else(|| (kind, m.error.clone().unwrap_or_default()))?;
        }
        Ok(out)
    }
}

fn tight() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-12,
        rel_tol: 1e-12,
        max_depth: 60,
    }
}

/// Closed-form Gini index.
pub fn gini_closed(model: &LorenzModel) -> Result<f64, MeasureError> {
    let g = match *model {
        LorenzModel::KakwaniSpecial { a, beta } => 2.0 * a / ((beta + 1.0) * (beta + 2.0)),
        LorenzModel::Ortega { a, b } => 1.0 - 2.0 * (1.0 / (a + 1.0) - beta_fn(a + 1.0, b + 1.0)?),
        LorenzModel::SarabiaL2 { a, b, d } => 1.0 - 2.0 * (1.0 / (a + 1.0) - beta_fn((a + 1.0) / d, b + 1.0)? / d),
        LorenzModel::L3 { a, b, d, s } => {
            let k = s.powf(d);
            let ad1 = a * d + 1.0;
            // F − 1 and (1 − k)^b − 1, both kept away from cancellation
            let f_minus_one = hyp2f1_minus_one(-b, ad1, ad1 + 1.0, k)?;
            let tail_minus_one = -one_minus_pow(k, b);
            1.0 - 2.0 * f_minus_one / (ad1 * tail_minus_one)
        }
        LorenzModel::KakwaniBeta { .. } | LorenzModel::Gq { .. } => {
            return Err(MeasureError::Unsupported {
                family: model.family(),
                what: "the Gini index",
            })
        }
    };
    Ok(g)
}

/// Gini index as `1 − 2∫₀¹ L(p) dp`.
pub fn gini_numeric(model: &LorenzModel) -> Result<f64, MeasureError> {
    let area = integrate_curve(|p| model.evaluate(p), 0.0, 1.0, &tight())?;
    Ok(1.0 - 2.0 * area)
}

/// Closed form when the family has one, otherwise quadrature.
pub fn gini(model: &LorenzModel) -> Result<(f64, Method), MeasureError> {
    if model.family().has_closed_gini() {
        if let Ok(g) = gini_closed(model) {
            if g.is_finite() {
                return Ok((g, Method::ClosedForm));
            }
        }
    }
    Ok((gini_numeric(model)?, Method::Quadrature))
}

/// Generalized Gini `G(ν) = 1 − ν(ν+1) ∫₀¹ (1−p)^{ν−1} L(p) dp`.
pub fn generalized_gini(model: &LorenzModel, nu: f64) -> Result<f64, MeasureError> {
    if !(nu >= 1.0) || !nu.is_finite() {
        return Err(MeasureError::Domain(format!("nu must be >= 1, got {nu}")));
    }
    if let LorenzModel::KakwaniSpecial { a, beta } = *model {
        return Ok(nu * (nu + 1.0) * a / ((beta + nu) * (beta + nu + 1.0)));
    }
    generalized_gini_numeric(model, nu)
}

/// Quadrature form of [`generalized_gini`] for every family.
pub fn generalized_gini_numeric(model: &LorenzModel, nu: f64) -> Result<f64, MeasureError> {
    if !(nu >= 1.0) || !nu.is_finite() {
        return Err(MeasureError::Domain(format!("nu must be >= 1, got {nu}")));
    }
    let weighted = integrate_curve(
        |p| model.evaluate(p).map(|l| (1.0 - p).powf(nu - 1.0) * l),
        0.0,
        1.0,
        &tight(),
    )?;
    Ok(1.0 - nu * (nu + 1.0) * weighted)
}

/// `Q(p) = μ L′(p)` for `p ∈ (0, 1)`.
pub fn quantile(model: &LorenzModel, p: f64, ctx: &EconomicContext) -> Result<f64, MeasureError> {
    Ok(ctx.mean * model.derivative(p)?)
}

/// `Q(0⁺)`, the bottom of the income support.
pub fn support_min(model: &LorenzModel, ctx: &EconomicContext) -> f64 {
    ctx.mean * model.slope_at_zero()
}

/// `Q(1⁻)`, the top of the income support (possibly infinite).
pub fn support_max(model: &LorenzModel, ctx: &EconomicContext) -> f64 {
    ctx.mean * model.slope_at_one()
}

/// Abscissae used to probe monotonicity and bracket the headcount.
fn probe_grid() -> Vec<f64> {
    let mut pts: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
    for k in 3..=15 {
        let t = 10f64.powi(-k);
        pts.push(t);
        pts.push(1.0 - t);
    }
    pts.sort_by(f64::total_cmp);
    pts
}

/// Errors out when the curve dips below zero; poverty integrals are
/// meaningless there.
fn ensure_nonnegative(model: &LorenzModel) -> Result<(), MeasureError> {
    if check_validity_analytic(model).is_genuine() {
        return Ok(());
    }
    for i in 1..2000 {
        let p = i as f64 / 2000.0;
        let v = model.evaluate(p)?;
        if v < -1e-12 {
            return Err(MeasureError::NegativeCurve { at: p, value: v });
        }
    }
    for k in 3..=300 {
        let p = 10f64.powi(-k);
        let v = model.evaluate(p)?;
        if v < 0.0 {
            return Err(MeasureError::NegativeCurve { at: p, value: v });
        }
    }
    Ok(())
}

/// Headcount ratio `H`: the population share with income below `z`.
pub fn headcount(model: &LorenzModel, ctx: &EconomicContext) -> Result<f64, MeasureError> {
    ensure_nonnegative(model)?;
    let z = ctx.poverty_line;
    let probes = probe_grid();
    let mut q = Vec::with_capacity(probes.len());
    for &p in &probes {
        q.push(ctx.mean * model.derivative_unchecked(p)?);
    }
    for (i, w) in q.windows(2).enumerate() {
        if w[1] < w[0] - 1e-10 * w[0].abs().max(1.0) {
            return Err(MeasureError::NonMonotoneQuantile { at: probes[i + 1] });
        }
    }
    if z <= support_min(model, ctx) {
        return Ok(0.0);
    }
    if z >= support_max(model, ctx) {
        return Ok(1.0);
    }
    // Bracket the root between neighbouring probes.
    let above = q.iter().position(|&v| v > z);
    let (lo, hi) = match above {
        Some(0) => (0.0, probes[0]),
        Some(i) => (probes[i - 1], probes[i]),
        None => (probes[probes.len() - 1], 1.0),
    };
    let f = |p: f64| {
        let pc = p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        ctx.mean * model.derivative_unchecked(pc).unwrap_or(f64::NAN) - z
    };
    // Roots within an ulp of an endpoint of [0, 1] cannot be bracketed.
    if f(hi) < 0.0 {
        return Ok(hi);
    }
    if f(lo) > 0.0 {
        return Ok(lo);
    }
    let bracket = RootBracket::with_tol(lo, hi, 1e-15)?;
    Ok(find_root(f, bracket)?)
}

/// Foster–Greer–Thorbecke index of order 0, 1 or 2.
pub fn fgt(model: &LorenzModel, ctx: &EconomicContext, order: u8) -> Result<f64, MeasureError> {
    let h = headcount(model, ctx)?;
    fgt_with_headcount(model, ctx, order, h)
}

fn fgt_with_headcount(model: &LorenzModel, ctx: &EconomicContext, order: u8, h: f64) -> Result<f64, MeasureError> {
    let r = ctx.mean / ctx.poverty_line;
    match order {
        0 => Ok(h),
        1 => Ok((h - r * model.evaluate(h)?).max(0.0)),
        2 => {
            if h == 0.0 {
                return Ok(0.0);
            }
            integrate_curve(
                |p| model.derivative_unchecked(p).map(|d| (1.0 - r * d).powi(2)),
                0.0,
                h,
                &tight(),
            )
        }
        other => Err(MeasureError::Domain(format!(
            "FGT order must be 0, 1 or 2, got {other}"
        ))),
    }
}

/// Watts index `∫₀^H ln(z / Q(p)) dp`.
pub fn watts(model: &LorenzModel, ctx: &EconomicContext) -> Result<f64, MeasureError> {
    let h = headcount(model, ctx)?;
    watts_with_headcount(model, ctx, h)
}

fn watts_with_headcount(model: &LorenzModel, ctx: &EconomicContext, h: f64) -> Result<f64, MeasureError> {
    if h == 0.0 {
        return Ok(0.0);
    }
    let ln_ratio = (ctx.poverty_line / ctx.mean).ln();
    integrate_curve(
        |p| model.derivative_unchecked(p).map(|d| ln_ratio - d.ln()),
        0.0,
        h,
        &tight(),
    )
}

/// Mean log deviation `−∫₀¹ ln L′(p) dp`; the mean cancels.
pub fn mld(model: &LorenzModel) -> Result<f64, MeasureError> {
    integrate_curve(|p| model.derivative_unchecked(p).map(|d| -d.ln()), 0.0, 1.0, &tight())
}

/// Integrates a fallible integrand; curve errors abort the integral.
fn integrate_curve<F>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64, MeasureError>
where
    F: Fn(f64) -> Result<f64, CurveError>,
{
    let failure = std::cell::RefCell::new(None);
    let r = integrate(
        |p| match f(p) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        spec,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    r.map_err(|e| match e {
        NumericsError::DepthExhausted { .. } | NumericsError::NonFiniteIntegrand { .. } => MeasureError::Divergent(e),
        other => MeasureError::Numerics(other),
    })
}

/// All six measures; a failing measure is recorded without aborting the rest.
pub fn measure_set(model: &LorenzModel, ctx: &EconomicContext) -> MeasureSet {
    let h = headcount(model, ctx);
    let with_h = |f: &dyn Fn(f64) -> Result<f64, MeasureError>| match &h {
        Ok(h) => f(*h),
        Err(e) => Err(e.clone()),
    };
    let gap = with_h(&|h| fgt_with_headcount(model, ctx, 1, h));
    let severity = with_h(&|h| fgt_with_headcount(model, ctx, 2, h));
    let w = with_h(&|h| watts_with_headcount(model, ctx, h));
    let (gini_value, gini_method) = match gini(model) {
        Ok((g, m)) => (Ok(g), m),
        Err(e) => (Err(e), Method::Quadrature),
    };
    let mld_value = ensure_nonnegative(model).and_then(|_| mld(model));
    MeasureSet {
        headcount: MeasureValue::from_result(h, Method::Quadrature),
        poverty_gap: MeasureValue::from_result(gap, Method::ClosedForm),
        poverty_severity: MeasureValue::from_result(severity, Method::Quadrature),
        watts: MeasureValue::from_result(w, Method::Quadrature),
        gini: MeasureValue::from_result(gini_value, gini_method),
        mld: MeasureValue::from_result(mld_value, Method::Quadrature),
    }
}
