//! Sampling studies: draw incomes from a model, regroup them into shares,
//! refit and compare the refitted measures with the truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{check_validity_analytic, CurveError, Family, LorenzModel};
use crate::estimation::{ewmd_fit, DataError, EstimationError, FitConfig, GroupedDataset};
use crate::measures::{measure_set, EconomicContext, MeasureError, MeasureKind, MeasureSet};

/// Uniform draws are kept this far from 0 and 1, where quantiles may diverge.
pub const P_CLIP: f64 = 1e-12;

/// Largest fraction of replications that may fail before a study is rejected.
pub const MAX_DROP_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation configuration: {0}")]
    Config(String),
    #[error("truth model is not a genuine Lorenz curve ({0})")]
    NotGenuine(String),
    #[error("all incomes are zero; shares are undefined")]
    ZeroIncome,
    #[error("income {value} at position {index} is negative or not finite")]
    BadIncome { index: usize, value: f64 },
    #[error("truth measure {kind:?} unavailable: {reason}")]
    Truth { kind: MeasureKind, reason: String },
    #[error("{dropped} of {reps} replications failed; last error: {last}")]
    TooManyFailures { dropped: usize, reps: usize, last: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Seeded ChaCha stream. Replication `r` of a study seeded with `seed` reads
/// stream `r` of that key, so replications are independent of each other and
/// of the order in which they run.
#[derive(Debug, Clone)]
pub struct RandomSource {
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self::for_replication(seed, 0)
    }

    pub fn for_replication(seed: u64, replication: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replication);
        Self { rng }
    }

    /// Uniform on `[P_CLIP, 1 − P_CLIP]`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>().clamp(P_CLIP, 1.0 - P_CLIP)
    }
}

/// Income at population rank `p`: `μ L′(p)`.
pub fn income_at(model: &LorenzModel, mean: f64, p: f64) -> Result<f64, CurveError> {
    Ok(mean * model.derivative(p.clamp(P_CLIP, 1.0 - P_CLIP))?)
}

/// `n` incomes drawn by inverse transform from a genuine model.
pub fn sample_incomes(model: &LorenzModel, mean: f64, n: usize, rng: &mut RandomSource) -> Result<Vec<f64>, SimError> {
    EconomicContext::new(mean, 1.0)?;
    let report = check_validity_analytic(model);
    if !report.is_genuine() {
        return Err(SimError::NotGenuine(violation_summary(&report)));
    }
    draw(model, mean, n, rng)
}

fn violation_summary(report: &crate::curves::ValidityReport) -> String {
    report
        .violations
        .iter()
        .map(|v| v.detail.clone())
        .collect::<Vec<_>>()
        .join("; ")
}

fn draw(model: &LorenzModel, mean: f64, n: usize, rng: &mut RandomSource) -> Result<Vec<f64>, SimError> {
    (0..n)
        .map(|i| {
            let x = income_at(model, mean, rng.uniform())?;
            if x.is_finite() && x >= 0.0 {
                Ok(x)
            } else {
                Err(SimError::BadIncome { index: i, value: x })
            }
        })
        .collect()
}

/// Cumulative shares of `groups` equal-count groups of the sorted incomes.
/// When the count does not divide evenly the first groups take one extra.
pub fn group_shares(incomes: &[f64], groups: usize) -> Result<GroupedDataset, SimError> {
    let n = incomes.len();
    if groups < 2 || n < groups {
        return Err(SimError::Config(format!(
            "need at least 2 groups and one income per group, got {groups} groups for {n} incomes"
        )));
    }
    if let Some((index, &value)) = incomes.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
        return Err(SimError::BadIncome { index, value });
    }
    let mut sorted = incomes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    if total <= 0.0 {
        return Err(SimError::ZeroIncome);
    }

    let (base, extra) = (n / groups, n % groups);
    let mut u = Vec::with_capacity(groups - 1);
    let mut s = Vec::with_capacity(groups - 1);
    let (mut count, mut running) = (0usize, 0.0);
    for g in 0..groups - 1 {
        let size = base + usize::from(g < extra);
        running += sorted[count..count + size].iter().sum::<f64>();
        count += size;
        let uj = count as f64 / n as f64;
        // rounding can push a share of nearly equal incomes past the diagonal
        u.push(uj);
        s.push((running / total).min(uj));
    }
    Ok(GroupedDataset::new("sample", u, s, Some(total / n as f64), None)?)
}

/// Signed estimation error `estimate − reference`.
pub fn estimation_error(estimate: f64, reference: f64) -> f64 {
    estimate - reference
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Sample size per replication.
    pub n: usize,
    pub reps: usize,
    pub groups: usize,
    pub seed: u64,
    /// Family refitted in every replication.
    pub family: Family,
    pub fit: FitConfig,
}

impl SimConfig {
    pub fn new(n: usize, family: Family, seed: u64) -> Self {
        Self {
            n,
            reps: 1000,
            groups: 10,
            seed,
            family,
            fit: FitConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.groups < 2 {
            return Err(SimError::Config(format!(
                "group count must be at least 2, got {}",
                self.groups
            )));
        }
        if self.n < self.groups {
            return Err(SimError::Config(format!(
                "sample size {} is smaller than the group count {}",
                self.n, self.groups
            )));
        }
        if self.reps == 0 {
            return Err(SimError::Config("at least one replication is required".into()));
        }
        Ok(())
    }
}

/// Replication statistics of one measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureStats {
    pub kind: MeasureKind,
    pub truth: f64,
    pub mean_estimate: f64,
    /// `mean_estimate − truth`
    pub bias: f64,
    pub abs_bias: f64,
    /// Average of `|estimate − truth|` over replications.
    pub mean_abs_error: f64,
    /// Sample standard deviation of the estimates.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub truth_model: LorenzModel,
    pub mean: f64,
    pub poverty_line: f64,
    pub config: SimConfig,
    pub truth: MeasureSet,
    pub stats: Vec<MeasureStats>,
    pub completed: usize,
    pub dropped: usize,
}

impl SimSummary {
    pub fn stat(&self, kind: MeasureKind) -> &MeasureStats {
        self.stats
            .iter()
            .find(|s| s.kind == kind)
            .expect("all measures summarized")
    }
}

fn replicate(truth: &LorenzModel, ctx: &EconomicContext, config: &SimConfig, r: usize) -> Result<[f64; 6], String> {
    let mut rng = RandomSource::for_replication(config.seed, r as u64);
    let incomes = draw(truth, ctx.mean, config.n, &mut rng).map_err(|e| e.to_string())?;
    let data = group_shares(&incomes, config.groups).map_err(|e| e.to_string())?;
    let fit = ewmd_fit(&data, config.family, &config.fit).map_err(|e: EstimationError| e.to_string())?;
    let sample_mean = data.mean.expect("group_shares records the sample mean");
    let sample_ctx = EconomicContext::new(sample_mean, ctx.poverty_line).map_err(|e| e.to_string())?;
    measure_set(&fit.model, &sample_ctx)
        .values()
        .map_err(|(kind, e)| format!("{}: {e}", kind.name()))
}

/// Bias and standard error of every measure over `config.reps` replications.
///
/// Replications run in parallel; results are stored by index and reduced in
/// index order, so the summary does not depend on scheduling.
pub fn simulate(truth: &LorenzModel, mean: f64, poverty_line: f64, config: &SimConfig) -> Result<SimSummary, SimError> {
    config.validate()?;
    let ctx = EconomicContext::new(mean, poverty_line)?;
    let report = check_validity_analytic(truth);
    if !report.is_genuine() {
        return Err(SimError::NotGenuine(violation_summary(&report)));
    }
    let truth_set = measure_set(truth, &ctx);
    let truth_values = truth_set
        .values()
        .map_err(|(kind, reason)| SimError::Truth { kind, reason })?;

    let results: Vec<Result<[f64; 6], String>> = (0..config.reps)
        .into_par_iter()
        .map(|r| replicate(truth, &ctx, config, r))
        .collect();

    let mut ok = Vec::with_capacity(results.len());
    let mut last = String::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => last = e,
        }
    }
    let dropped = config.reps - ok.len();
    if ok.is_empty() || dropped as f64 > MAX_DROP_FRACTION * config.reps as f64 {
        return Err(SimError::TooManyFailures {
            dropped,
            reps: config.reps,
            last,
        });
    }

    let k = ok.len() as f64;
    let stats = MeasureKind::ALL
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let truth = truth_values[i];
            let mean_estimate = ok.iter().map(|v| v[i]).sum::<f64>() / k;
            let mean_abs_error = ok.iter().map(|v| estimation_error(v[i], truth).abs()).sum::<f64>() / k;
            let se = if ok.len() > 1 {
                (ok.iter().map(|v| (v[i] - mean_estimate).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            let bias = estimation_error(mean_estimate, truth);
            MeasureStats {
                kind,
                truth,
                mean_estimate,
                bias,
                abs_bias: bias.abs(),
                mean_abs_error,
                se,
            }
        })
        .collect();

    Ok(SimSummary {
        truth_model: *truth,
        mean,
        poverty_line,
        config: *config,
        truth: truth_set,
        stats,
        completed: ok.len(),
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: LorenzModel = LorenzModel::KakwaniSpecial { a: 1.0, beta: 1.0 };

    #[test]
    fn income_examples() {
        assert!((income_at(&SQUARE, 1.0, 0.25).unwrap() - 0.5).abs() < 1e-15);
        let a = sample_incomes(&SQUARE, 1.0, 50, &mut RandomSource::new(7)).unwrap();
        let b = sample_incomes(&SQUARE, 1.0, 50, &mut RandomSource::new(7)).unwrap();
        assert_eq!(a, b);
        let c = sample_incomes(&SQUARE, 1.0, 50, &mut RandomSource::for_replication(7, 1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_mean_is_close_to_mu() {
        let x = sample_incomes(&SQUARE, 1.0, 100_000, &mut RandomSource::new(1)).unwrap();
        let m = x.iter().sum::<f64>() / x.len() as f64;
        assert!((m - 1.0).abs() < 0.01, "{m}");
    }

    #[test]
    fn non_genuine_truth_is_rejected() {
        let bad = LorenzModel::KakwaniBeta {
            a: 1.0,
            alpha: 0.5,
            beta: 0.5,
        };
        assert!(matches!(
            sample_incomes(&bad, 1.0, 10, &mut RandomSource::new(0)),
            Err(SimError::NotGenuine(_))
        ));
    }

    #[test]
    fn grouping_examples() {
        let d = group_shares(&[1.0, 1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!((d.u.clone(), d.s.clone()), (vec![0.5], vec![0.5]));
        let d = group_shares(&[3.0, 1.0], 2).unwrap();
        assert_eq!(d.s, vec![0.25]);
        assert_eq!(d.mean, Some(2.0));
        let d = group_shares(&[4.0, 2.0, 3.0, 1.0], 2).unwrap();
        assert!((d.s[0] - 0.3).abs() < 1e-15);
        // 7 incomes in 3 groups: sizes 3, 2, 2
        let d = group_shares(&[1.0; 7], 3).unwrap();
        assert_eq!(d.u, vec![3.0 / 7.0, 5.0 / 7.0]);
        assert!(matches!(group_shares(&[0.0, 0.0], 2), Err(SimError::ZeroIncome)));
        assert!(group_shares(&[1.0], 2).is_err());
        assert!(group_shares(&[1.0, -1.0], 2).is_err());
    }

    #[test]
    fn error_is_signed() {
        assert!((estimation_error(0.5, 0.45) - 0.05).abs() < 1e-15);
        assert!((estimation_error(0.45, 0.5) + 0.05).abs() < 1e-15);
        assert_eq!(estimation_error(0.3, 0.3), 0.0);
    }

    #[test]
    fn config_validation() {
        let mut c = SimConfig::new(5, Family::Ortega, 0);
        c.groups = 10;
        assert!(c.validate().is_err());
        c.n = 10;
        c.reps = 0;
        assert!(c.validate().is_err());
        c.groups = 1;
        c.reps = 1;
        assert!(c.validate().is_err());
    }
}
