use std::path::{Path, PathBuf};

use lorenz_core::curves::{check_validity_analytic, check_validity_numeric, ConstructionMode, LorenzModel};
use lorenz_core::estimation::{ewmd_fit, fit_all, FitConfig};
use lorenz_core::measures::{measure_set, EconomicContext};
use lorenz_core::montecarlo::{simulate, SimConfig, SimError};
use rayon::prelude::*;

use crate::args::{
    BatchArgs, Command, CurveArgs, Economy, Explicit, FitArgs, Format, MeasuresArgs, ModelChoice, SimulateArgs,
    ValidateArgs,
};
use crate::dataset::{list_datasets, parse_dataset, DatasetFile};
use crate::report::{
    curve_csv, models_csv, simulations_csv, Aggregate, CurvePoint, DatasetReport, Failure, ModelReport, Report,
};
use crate::CliError;

/// Poverty line used when neither the flag nor the dataset provides one.
pub const DEFAULT_POVERTY_LINE: f64 = 3.0;

/// A finished command: its report, the rendered output and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub output: String,
    pub exit_code: u8,
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    let common = command.common();
    let mut report = Report::new(command.name(), common.seed);
    report.echo("mode", mode_name(common.mode.into()));
    match command {
        Command::Fit(a) => fit(a, &mut report, false)?,
        Command::Compare(a) => fit(a, &mut report, true)?,
        Command::Validate(a) => validate(a, &mut report)?,
        Command::Measures(a) => measures(a, &mut report)?,
        Command::Simulate(a) => simulate_cmd(a, &mut report)?,
        Command::Curve(a) => curve(a, &mut report)?,
        Command::Batch(a) => batch(a, &mut report)?,
    }

    let format = common.format.unwrap_or(match command {
        Command::Curve(_) => Format::Csv,
        _ => Format::Json,
    });
    report.echo("format", format!("{format:?}").to_lowercase());
    let output = match format {
        Format::Json => report.to_json(),
        Format::Csv => match command {
            Command::Curve(_) => curve_csv(report.curve.as_deref().unwrap_or_default()),
            Command::Simulate(_) => simulations_csv(&report.simulations),
            Command::Batch(_) => report.aggregate.as_ref().map(Aggregate::to_csv).unwrap_or_default(),
            _ => models_csv(&report),
        },
    };
    let failed_validation = report
        .all_models()
        .any(|m| m.mode == ConstructionMode::Constrained && !certified(m));
    Ok(Outcome {
        exit_code: if failed_validation { 2 } else { 0 },
        report,
        output,
    })
}

fn certified(m: &ModelReport) -> bool {
    m.validity.is_genuine() && m.numeric_validity.as_ref().is_none_or(|v| v.is_genuine())
}

fn mode_name(mode: ConstructionMode) -> &'static str {
    match mode {
        ConstructionMode::Constrained => "constrained",
        ConstructionMode::Diagnostic => "diagnostic",
    }
}

fn explicit_model(c: &Explicit) -> Result<LorenzModel, CliError> {
    Ok(LorenzModel::new(c.model, &c.params, ConstructionMode::Diagnostic)?)
}

fn echo_explicit(report: &mut Report, c: &Explicit) {
    report.echo("model", c.model.cli_name());
    report.echo("params", &c.params);
}

/// Mean and poverty line from the flags, falling back to the dataset's
/// values. A missing mean is an error; a missing line takes the default.
fn context(
    economy: &Economy,
    data: Option<&DatasetFile>,
    warnings: &mut Vec<String>,
) -> Result<EconomicContext, CliError> {
    let mean = economy
        .mean
        .or(data.and_then(|d| d.data.mean))
        .ok_or(CliError::MissingMean)?;
    let line = match economy.povline.or(data.and_then(|d| d.data.poverty_line)) {
        Some(z) => z,
        None => {
            warnings.push(format!(
                "no poverty line given; using the default of {DEFAULT_POVERTY_LINE} per day"
            ));
            DEFAULT_POVERTY_LINE
        }
    };
    Ok(EconomicContext::new(mean, line)?)
}

fn fit_config(report: &Report, mode: ConstructionMode) -> FitConfig {
    FitConfig {
        mode,
        seed: report.seed,
        ..FitConfig::default()
    }
}

/// Fits the chosen families to one dataset. Measures are added when a
/// context is given, and compared with the dataset's reference values.
pub fn fit_dataset(
    file: &DatasetFile,
    choice: ModelChoice,
    config: &FitConfig,
    ctx: Option<&EconomicContext>,
) -> Result<DatasetReport, CliError> {
    let data = &file.data;
    let (fits, failures) = match choice {
        ModelChoice::All => {
            let all = fit_all(data, config)?;
            let failures = all
                .failures
                .into_iter()
                .map(|f| Failure {
                    subject: f.family.cli_name().to_string(),
                    error: f.error,
                })
                .collect();
            (all.fits, failures)
        }
        ModelChoice::One(family) => (vec![ewmd_fit(data, family, config)?], Vec::new()),
    };
    let fits = fits
        .iter()
        .map(|f| {
            let mut m = ModelReport::fitted(f);
            if let Some(ctx) = ctx {
                let set = measure_set(&f.model, ctx);
                m.errors = file
                    .reference
                    .iter()
                    .filter_map(|(&k, &r)| set.value(k).map(|v| (k, v - r)))
                    .collect();
                m.measures = Some(set);
            }
            m
        })
        .collect();
    Ok(DatasetReport {
        id: data.id.clone(),
        source: file.path.as_ref().map(|p| p.display().to_string()),
        points: data.len(),
        mean: ctx.map(|c| c.mean).or(data.mean),
        poverty_line: ctx.map(|c| c.poverty_line).or(data.poverty_line),
        trapezoid_gini: data.trapezoid_gini(),
        fits,
        failures,
    })
}

fn fit(a: &FitArgs, report: &mut Report, need_measures: bool) -> Result<(), CliError> {
    report.echo("model", a.model.to_string());
    report.echo("data", a.data.display().to_string());
    let file = parse_dataset(&a.data)?;
    let has_mean = a.economy.mean.is_some() || file.data.mean.is_some();
    let ctx = if need_measures || has_mean {
        Some(context(&a.economy, Some(&file), &mut report.warnings)?)
    } else {
        None
    };
    echo_context(report, ctx.as_ref());
    let config = fit_config(report, a.common.mode.into());
    report
        .datasets
        .push(fit_dataset(&file, a.model, &config, ctx.as_ref())?);
    Ok(())
}

fn echo_context(report: &mut Report, ctx: Option<&EconomicContext>) {
    if let Some(c) = ctx {
        report.echo("mean", c.mean);
        report.echo("poverty_line", c.poverty_line);
    }
}

fn validate(a: &ValidateArgs, report: &mut Report) -> Result<(), CliError> {
    echo_explicit(report, &a.curve);
    report.echo("grid", a.grid);
    let model = explicit_model(&a.curve)?;
    let mut m = ModelReport::explicit(&model, a.common.mode.into(), check_validity_analytic(&model));
    m.numeric_validity = Some(check_validity_numeric(&model, a.grid));
    report.models.push(m);
    Ok(())
}

fn measures(a: &MeasuresArgs, report: &mut Report) -> Result<(), CliError> {
    report.echo("model", a.model.to_string());
    let mode: ConstructionMode = a.common.mode.into();
    if let Some(params) = &a.params {
        let ModelChoice::One(family) = a.model else {
            return Err(CliError::Usage("--params needs a single --model, not `all`".into()));
        };
        report.echo("params", params);
        let model = LorenzModel::new(family, params, ConstructionMode::Diagnostic)?;
        let ctx = context(&a.economy, None, &mut report.warnings)?;
        echo_context(report, Some(&ctx));
        let mut m = ModelReport::explicit(&model, mode, check_validity_analytic(&model));
        m.measures = Some(measure_set(&model, &ctx));
        report.models.push(m);
        return Ok(());
    }
    let path = a.data.as_ref().expect("clap requires --data without --params");
    report.echo("data", path.display().to_string());
    let file = parse_dataset(path)?;
    let ctx = context(&a.economy, Some(&file), &mut report.warnings)?;
    echo_context(report, Some(&ctx));
    let config = fit_config(report, mode);
    report.datasets.push(fit_dataset(&file, a.model, &config, Some(&ctx))?);
    Ok(())
}

fn simulate_cmd(a: &SimulateArgs, report: &mut Report) -> Result<(), CliError> {
    echo_explicit(report, &a.truth);
    report.echo("n", &a.n);
    report.echo("reps", a.reps);
    report.echo("groups", a.groups);
    let truth = explicit_model(&a.truth)?;
    let ctx = context(&a.economy, None, &mut report.warnings)?;
    echo_context(report, Some(&ctx));
    let refit = a.refit.unwrap_or(ModelChoice::One(truth.family()));
    report.echo("refit", refit.to_string());
    let mode: ConstructionMode = a.common.mode.into();

    let mut m = ModelReport::explicit(&truth, ConstructionMode::Diagnostic, check_validity_analytic(&truth));
    m.measures = Some(measure_set(&truth, &ctx));
    report.models.push(m);

    let fit = fit_config(report, mode);
    for family in refit.families() {
        for &n in &a.n {
            let config = SimConfig {
                n,
                reps: a.reps,
                groups: a.groups,
                seed: report.seed,
                family,
                fit,
            };
            // one refit family failing too often does not sink the others
            match simulate(&truth, ctx.mean, ctx.poverty_line, &config) {
                Ok(summary) => report.simulations.push(summary),
                Err(e @ SimError::TooManyFailures { .. }) => report.failures.push(Failure {
                    subject: format!("{} n={n}", family.cli_name()),
                    error: e.to_string(),
                }),
                Err(e) => return Err(e.into()),
            }
        }
    }
    if report.simulations.is_empty() {
        return Err(CliError::AllFailed {
            what: "simulations",
            count: report.failures.len(),
            first: report.failures[0].error.clone(),
        });
    }
    if !report.failures.is_empty() {
        report.warnings.push(format!(
            "{} simulation(s) dropped too many replications; see failures",
            report.failures.len()
        ));
    }
    Ok(())
}

fn curve(a: &CurveArgs, report: &mut Report) -> Result<(), CliError> {
    echo_explicit(report, &a.curve);
    report.echo("points", a.points);
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let model = explicit_model(&a.curve)?;
    let last = (a.points - 1) as f64;
    let points = (0..a.points)
        .map(|i| {
            let p = i as f64 / last;
            Ok(CurvePoint {
                p,
                l: model.evaluate(p)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    report.models.push(ModelReport::explicit(
        &model,
        ConstructionMode::Diagnostic,
        check_validity_analytic(&model),
    ));
    report.curve = Some(points);
    Ok(())
}

fn batch(a: &BatchArgs, report: &mut Report) -> Result<(), CliError> {
    report.echo("model", a.model.to_string());
    report.echo("data", a.data.display().to_string());
    let files = list_datasets(&a.data)?;
    if files.is_empty() {
        return Err(CliError::NoDatasets(a.data.clone()));
    }
    let config = fit_config(report, a.common.mode.into());

    type Processed = Result<(DatasetReport, Vec<String>), (PathBuf, String)>;
    let process = |path: &Path| -> Processed {
        let fail = |e: CliError| (path.to_path_buf(), e.to_string());
        let file = parse_dataset(path).map_err(|e| fail(e.into()))?;
        let mut warnings = Vec::new();
        let ctx = match context(&a.economy, Some(&file), &mut warnings) {
            Ok(c) => Some(c),
            Err(CliError::MissingMean) => None,
            Err(e) => return Err(fail(e)),
        };
        let d = fit_dataset(&file, a.model, &config, ctx.as_ref()).map_err(fail)?;
        Ok((d, warnings))
    };
    // results come back in file order whatever the scheduling
    let results: Vec<Processed> = files.par_iter().map(|p| process(p)).collect();

    let mut defaulted = 0;
    for r in results {
        match r {
            Ok((d, w)) => {
                defaulted += usize::from(!w.is_empty());
                report.datasets.push(d);
            }
            Err((path, error)) => report.failures.push(Failure {
                subject: path.display().to_string(),
                error,
            }),
        }
    }
    if defaulted > 0 {
        report.warnings.push(format!(
            "{defaulted} dataset(s) had no poverty line; used the default of {DEFAULT_POVERTY_LINE} per day"
        ));
    }
    if report.datasets.is_empty() {
        return Err(CliError::AllFailed {
            what: "datasets",
            count: report.failures.len(),
            first: report.failures[0].error.clone(),
        });
    }
    report.aggregate = Some(Aggregate::from_datasets(&report.datasets, report.failures.len()));
    Ok(())
}
