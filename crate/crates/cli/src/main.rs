mod commands;
mod manifest;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "sfm",
    version,
    about = "Sufficiency factor model calibration toolkit"
)]
pub struct Cli {
    /// Zero the manifest timestamp so identical runs give identical bytes.
    #[arg(long, global = true)]
    pub reproducible: bool,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Self::Text => "text",
            Self::Json => "json",
            Self::Csv => "csv",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate log moments from an annual dataset.
    Moments(MomentsArgs),
    /// Solve for CRRA and the sufficiency factors at one or more discount factors.
    Calibrate(CalibrateArgs),
    /// Label investor risk attitudes from utility comparisons.
    Classify(ClassifyArgs),
    /// Monte Carlo check of the lognormal closed forms on a synthetic economy.
    Simulate(SimulateArgs),
    /// Construct-then-calibrate recovery cycles.
    Roundtrip(RoundtripArgs),
    /// Render a calibration output as SVG.
    Plot(PlotArgs),
    /// Write moments for which a chosen (tau, eta, lambda) solves the sum form.
    Construct(ConstructArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VarianceArg {
    Sample,
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeanModeArg {
    Arithmetic,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RhoModeArg {
    Split,
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum YieldUnitArg {
    Decimal,
    Percent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RfRuleArg {
    ExPost,
    ExAnte,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Sum,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Newton,
    Reduced,
    Grid,
}

/// Dataset ingestion and estimator conventions.
#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    #[arg(long, value_enum, default_value = "sample")]
    pub variance: VarianceArg,
    #[arg(long, value_enum, default_value = "arithmetic")]
    pub mean_mode: MeanModeArg,
    #[arg(long, value_enum, default_value = "split")]
    pub rho_mode: RhoModeArg,
    #[arg(long, value_enum, default_value = "decimal")]
    pub yield_unit: YieldUnitArg,
    #[arg(long, value_enum, default_value = "ex-post")]
    pub rf_rule: RfRuleArg,
    /// Expected inflation for `--rf-rule ex-ante`; defaults to the sample mean.
    #[arg(long)]
    pub expected_inflation: Option<f64>,
    #[arg(long)]
    pub from_year: Option<i32>,
    #[arg(long)]
    pub to_year: Option<i32>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, conflicts_with = "data", required_unless_present = "data")]
    pub moments: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, default_value_t = 0.99, conflicts_with = "sweep")]
    pub beta: f64,
    /// Comma-separated discount factors, e.g. `0.97,0.98,0.99`.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "sum")]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value = "newton")]
    pub solver: SolverArg,
    /// Residual tolerance (max-norm).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tau_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tau_max: f64,
    /// Grid step for `--solver grid`.
    #[arg(long, default_value_t = 1e-3)]
    pub resolution: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write an SVG of the result to this path.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = sfm_core::classify::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0.018, allow_hyphen_values = true)]
    pub mu_x: f64,
    #[arg(long, default_value_t = 0.036)]
    pub sigma_x: f64,
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    pub mu_k: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sigma_k: f64,
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    pub rho_xk: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    #[arg(long, default_value_t = 4.4)]
    pub tau: f64,
    /// Also write the first `--series-len` generated transitions as CSV.
    #[arg(long)]
    pub series: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub series_len: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Calibration output in JSON format.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// Moments file supplying everything except mu_k and the mean returns.
    #[arg(long)]
    pub base: PathBuf,
    #[arg(long)]
    pub tau: f64,
    #[arg(long)]
    pub eta: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.99)]
    pub beta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = commands::Context {
        reproducible: cli.reproducible,
        format: cli.format,
    };
    let outcome = match &cli.command {
        Command::Moments(a) => commands::moments::run(&ctx, a),
        Command::Calibrate(a) => commands::calibrate::run(&ctx, a),
        Command::Classify(a) => commands::classify::run(&ctx, a),
        Command::Simulate(a) => commands::simulate::run(&ctx, a),
        Command::Roundtrip(a) => commands::roundtrip::run(&ctx, a),
        Command::Plot(a) => commands::plot::run(&ctx, a),
        Command::Construct(a) => commands::construct::run(&ctx, a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
