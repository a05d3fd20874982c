//! Machine-readable run reports. The layout is described by
//! `docs/report.schema.json`.

use std::collections::BTreeMap;

use lorenz_core::curves::{ConstructionMode, Family, LorenzModel, ValidityReport};
use lorenz_core::estimation::FitResult;
use lorenz_core::measures::{MeasureKind, MeasureSet};
use lorenz_core::montecarlo::SimSummary;
use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    /// Echo of the effective settings.
    pub config: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Curves given explicitly on the command line.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub datasets: Vec<DatasetReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub simulations: Vec<SimSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<Vec<CurvePoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<Aggregate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<Failure>,
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            seed,
            config: BTreeMap::new(),
            warnings: Vec::new(),
            models: Vec::new(),
            datasets: Vec::new(),
            simulations: Vec::new(),
            curve: None,
            aggregate: None,
            failures: Vec::new(),
        }
    }

    pub fn echo(&mut self, key: &str, value: impl Serialize) {
        self.config.insert(
            key.to_string(),
            serde_json::to_value(value).expect("config values serialize"),
        );
    }

    /// Every reported model, explicit or fitted.
    pub fn all_models(&self) -> impl Iterator<Item = &ModelReport> {
        self.models
            .iter()
            .chain(self.datasets.iter().flat_map(|d| d.fits.iter()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub family: Family,
    pub mode: ConstructionMode,
    pub params: BTreeMap<String, f64>,
    /// Least-squares fit details; absent for curves given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitInfo>,
    pub validity: ValidityReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_validity: Option<ValidityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measures: Option<MeasureSet>,
    /// `estimate − reference` for each measure with a published value.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub errors: BTreeMap<MeasureKind, f64>,
}

impl ModelReport {
    pub fn explicit(model: &LorenzModel, mode: ConstructionMode, validity: ValidityReport) -> Self {
        Self {
            family: model.family(),
            mode,
            params: named_params(model),
            fit: None,
            validity,
            numeric_validity: None,
            measures: None,
            errors: BTreeMap::new(),
        }
    }

    pub fn fitted(fit: &FitResult) -> Self {
        Self {
            family: fit.family,
            mode: fit.mode,
            params: named_params(&fit.model),
            fit: Some(FitInfo {
                rss: fit.rss.is_finite().then_some(fit.rss),
                converged: fit.converged,
                iterations: fit.iterations,
                identified: fit.identified,
                note: fit.note.clone(),
            }),
            validity: fit.validity.clone(),
            numeric_validity: None,
            measures: None,
            errors: BTreeMap::new(),
        }
    }

    pub fn rss(&self) -> Option<f64> {
        self.fit.as_ref().and_then(|f| f.rss)
    }
}

pub fn named_params(model: &LorenzModel) -> BTreeMap<String, f64> {
    model
        .family()
        .param_names()
        .iter()
        .zip(model.params())
        .map(|(n, v)| (n.to_string(), v))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    /// `None` when the fitted curve cannot be evaluated at every data point.
    pub rss: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub identified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poverty_line: Option<f64>,
    /// Gini of the piecewise-linear curve through the data.
    pub trapezoid_gini: f64,
    /// Fits in increasing order of rss.
    pub fits: Vec<ModelReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    /// Dataset path or family the failure belongs to.
    pub subject: String,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub p: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

/// Distribution of a quantity over datasets: mean of absolute values and
/// percentiles of signed values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub count: usize,
    pub average: f64,
    pub p10: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
}

pub const TABLE_ROWS: [&str; 6] = ["Average", "10%", "25%", "50%", "75%", "90%"];

impl Distribution {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let average = sorted.iter().map(|v| v.abs()).sum::<f64>() / sorted.len() as f64;
        let q = |p: f64| percentile(&sorted, p);
        Some(Self {
            count: sorted.len(),
            average,
            p10: q(0.10),
            p25: q(0.25),
            p50: q(0.50),
            p75: q(0.75),
            p90: q(0.90),
        })
    }

    pub fn rows(&self) -> [f64; 6] {
        [self.average, self.p10, self.p25, self.p50, self.p75, self.p90]
    }
}

/// Linear interpolation between order statistics of sorted data.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateEntry {
    pub family: Family,
    /// `rss` or a measure name.
    pub quantity: String,
    pub stats: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub datasets: usize,
    pub failed: usize,
    pub entries: Vec<AggregateEntry>,
}

impl Aggregate {
    /// Tables of rss and of measure errors against the datasets' reference
    /// values, one entry per family and quantity.
    pub fn from_datasets(datasets: &[DatasetReport], failed: usize) -> Self {
        let mut series: BTreeMap<(String, Family), Vec<f64>> = BTreeMap::new();
        let order = |q: &str| -> String {
            let rank = std::iter::once("rss")
                .chain(MeasureKind::ALL.iter().map(|k| k.name()))
                .position(|n| n == q)
                .unwrap_or(99);
            format!("{rank:02}{q}")
        };
        for d in datasets {
            for m in &d.fits {
                if let Some(r) = m.rss() {
                    series.entry((order("rss"), m.family)).or_default().push(r);
                }
                for (kind, e) in &m.errors {
                    series.entry((order(kind.name()), m.family)).or_default().push(*e);
                }
            }
        }
        let entries = series
            .into_iter()
            .filter_map(|((q, family), v)| {
                Distribution::of(&v).map(|stats| AggregateEntry {
                    family,
                    quantity: q[2..].to_string(),
                    stats,
                })
            })
            .collect();
        Self {
            datasets: datasets.len(),
            failed,
            entries,
        }
    }

    /// CSV table: one block of six rows per quantity, one column per family.
    pub fn to_csv(&self) -> String {
        let mut families: Vec<Family> = self.entries.iter().map(|e| e.family).collect();
        families.sort();
        families.dedup();
        let mut out = String::from("quantity,statistic");
        for f in &families {
            out.push(',');
            out.push_str(f.cli_name());
        }
        out.push('\n');
        let mut quantities: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !quantities.contains(&e.quantity.as_str()) {
                quantities.push(&e.quantity);
            }
        }
        for q in quantities {
            for (row, label) in TABLE_ROWS.iter().enumerate() {
                out.push_str(&format!("{q},{label}"));
                for f in &families {
                    out.push(',');
                    if let Some(e) = self.entries.iter().find(|e| e.quantity == q && e.family == *f) {
                        out.push_str(&format!("{:?}", e.stats.rows()[row]));
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

/// CSV table of fitted or explicit models: parameters, rss, verdict, measures.
pub fn models_csv(report: &Report) -> String {
    let mut out = String::from("dataset,family,mode,params,rss,genuine");
    for k in MeasureKind::ALL {
        out.push(',');
        out.push_str(k.name());
    }
    out.push('\n');
    let rows = report.models.iter().map(|m| ("", m)).chain(
        report
            .datasets
            .iter()
            .flat_map(|d| d.fits.iter().map(move |m| (d.id.as_str(), m))),
    );
    for (id, m) in rows {
        let params: Vec<String> = m
            .family
            .param_names()
            .iter()
            .map(|n| format!("{n}={:?}", m.params[*n]))
            .collect();
        let mode = match m.mode {
            ConstructionMode::Constrained => "constrained",
            ConstructionMode::Diagnostic => "diagnostic",
        };
        out.push_str(&format!(
            "{id},{},{mode},{},{},{}",
            m.family,
            params.join(" "),
            m.rss().map(|r| format!("{r:?}")).unwrap_or_default(),
            m.validity.is_genuine()
        ));
        for k in MeasureKind::ALL {
            out.push(',');
            if let Some(v) = m.measures.as_ref().and_then(|s| s.value(k)) {
                out.push_str(&format!("{v:?}"));
            }
        }
        out.push('\n');
    }
    out
}

/// CSV of sampled curve points.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("p,L\n");
    for pt in points {
        out.push_str(&format!("{},{}\n", pt.p, pt.l));
    }
    out
}

/// CSV of simulation summaries, one row per (sample size, family, measure).
pub fn simulations_csv(sims: &[SimSummary]) -> String {
    let mut out = String::from("family,n,reps,completed,measure,truth,mean_estimate,bias,abs_bias,mean_abs_error,se\n");
    for s in sims {
        for st in &s.stats {
            out.push_str(&format!(
                "{},{},{},{},{},{:?},{:?},{:?},{:?},{:?},{:?}\n",
                s.config.family,
                s.config.n,
                s.config.reps,
                s.completed,
                st.kind.name(),
                st.truth,
                st.mean_estimate,
                st.bias,
                st.abs_bias,
                st.mean_abs_error,
                st.se
            ));
        }
    }
    out
}
