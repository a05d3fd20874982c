use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lorenz_core::curves::{ConstructionMode, Family};

/// Parametric Lorenz curves for grouped income data.
#[derive(Debug, Parser)]
#[command(name = "lorenz", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one family or all of them to a dataset.
    Fit(FitArgs),
    /// Check whether a parameterized curve is a genuine Lorenz curve.
    Validate(ValidateArgs),
    /// Poverty and inequality measures of a given or fitted curve.
    Measures(MeasuresArgs),
    /// Sampling study: draw, regroup, refit, summarize bias and standard errors.
    Simulate(SimulateArgs),
    /// Fit every family to a dataset and rank them.
    Compare(FitArgs),
    /// Sample a curve on an even grid for plotting.
    Curve(CurveArgs),
    /// Run `compare` on every dataset in a directory and aggregate.
    Batch(BatchArgs),
}

/// `all` or one family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    All,
    One(Family),
}

impl ModelChoice {
    pub fn families(self) -> Vec<Family> {
        match self {
            ModelChoice::All => Family::ALL.to_vec(),
            ModelChoice::One(f) => vec![f],
        }
    }
}

impl FromStr for ModelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(ModelChoice::All);
        }
        s.parse::<Family>()
            .map(ModelChoice::One)
            .map_err(|_| format!("unknown model `{s}` (expected kakwani|kakwani1|ortega|l2|l3|gq|all)"))
    }
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelChoice::All => f.write_str("all"),
            ModelChoice::One(family) => family.fmt(f),
        }
    }
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse::<Family>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Constrained,
    Diagnostic,
}

impl From<Mode> for ConstructionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Constrained => ConstructionMode::Constrained,
            Mode::Diagnostic => ConstructionMode::Diagnostic,
        }
    }
}

/// Flags shared by every command.
#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, value_enum, default_value_t = Mode::Constrained)]
    pub mode: Mode,
    /// Seed for multistart and sampling.
    #[arg(long, env = "LORENZ_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Mean income and poverty line, when the command needs them.
#[derive(Debug, Clone, Args)]
pub struct Economy {
    /// Mean income; overrides the dataset's.
    #[arg(long)]
    pub mean: Option<f64>,
    /// Poverty line; overrides the dataset's.
    #[arg(long)]
    pub povline: Option<f64>,
}

/// A curve given on the command line.
#[derive(Debug, Clone, Args)]
pub struct Explicit {
    /// kakwani, kakwani1, ortega, l2, l3 or gq.
    #[arg(long, value_parser = parse_family)]
    pub model: Family,
    /// Comma-separated parameters in the family's order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long, default_value = "all")]
    pub model: ModelChoice,
    /// Dataset file (.csv or .json).
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub economy: Economy,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub curve: Explicit,
    /// Grid size of the numeric check.
    #[arg(long, default_value_t = lorenz_core::curves::DEFAULT_GRID)]
    pub grid: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct MeasuresArgs {
    /// A family, or `all` together with `--data`.
    #[arg(long)]
    pub model: ModelChoice,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "data")]
    pub params: Option<Vec<f64>>,
    #[arg(long, required_unless_present = "params")]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub economy: Economy,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub truth: Explicit,
    #[command(flatten)]
    pub economy: Economy,
    /// Sample sizes, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "500,2500,5000")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 10)]
    pub groups: usize,
    /// Family refitted in each replication, or `all`; defaults to the truth's.
    #[arg(long)]
    pub refit: Option<ModelChoice>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub curve: Explicit,
    /// Number of evenly spaced points on [0, 1].
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct BatchArgs {
    #[arg(long, default_value = "all")]
    pub model: ModelChoice,
    /// Directory of dataset files.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub economy: Economy,
    #[command(flatten)]
    pub common: Common,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Fit(a) | Command::Compare(a) => &a.common,
            Command::Validate(a) => &a.common,
            Command::Measures(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Curve(a) => &a.common,
            Command::Batch(a) => &a.common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Validate(_) => "validate",
            Command::Measures(_) => "measures",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::Curve(_) => "curve",
            Command::Batch(_) => "batch",
        }
    }
}
