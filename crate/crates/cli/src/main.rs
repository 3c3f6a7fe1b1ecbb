//! `qg3`: basis inspection, bound campaigns, geodesic runs and synthesis for n-qutrit
//! penalty-metric geometry.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "qg3", version, about = "Penalty-metric geometry and gate synthesis for qutrit systems")]
pub struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Count (and optionally list) product-basis labels.
    Basis(BasisArgs),
    /// Run a randomized bound-verification campaign.
    Verify(VerifyArgs),
    /// Integrate or evaluate a geodesic and write its trajectory.
    Geodesic(GeodesicArgs),
    /// Compile a schedule into one- and two-qutrit gates with an error budget.
    Synthesize(SynthesizeArgs),
    /// Sweep the penalty or the slice width and tabulate the budget.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BasisArgs {
    #[arg(long)]
    pub n: usize,
    /// Only count labels of at most this body weight in the listing.
    #[arg(long)]
    pub max_body: Option<usize>,
    /// Include every label in the output.
    #[arg(long)]
    pub list: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Lemma {
    Closure,
    Prop1,
    Lemma3,
    Lemma4,
    Trotter,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub lemma: Lemma,
    /// Site count for the closure check.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GeodesicMode {
    /// Full geodesic flow from a random initial momentum.
    Numeric,
    /// Closed-form three-qutrit solution.
    Analytic,
    /// Integrated reduced three-qutrit system against the closed form.
    Compare,
}

#[derive(Debug, Args, Serialize)]
pub struct GeodesicArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Penalty (default 9^n).
    #[arg(long)]
    pub p: Option<f64>,
    /// One-body weight.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long = "t-f", default_value_t = 1.0)]
    pub t_f: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = GeodesicMode::Numeric)]
    pub mode: GeodesicMode,
    /// Also write full states as JSON lines (numeric mode).
    #[arg(long)]
    pub states: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScheduleSource {
    /// Schedule file in the JSON schedule format.
    #[arg(long, conflicts_with = "example")]
    pub schedule: Option<PathBuf>,
    /// Use the bundled two-qutrit example schedule.
    #[arg(long)]
    pub example: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: ScheduleSource,
    /// Penalty (default 9^n).
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Slice width.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Report gate angles for unit-norm generators.
    #[arg(long)]
    pub unit_norm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    P,
    Delta,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub parameter: SweepParameter,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: ScheduleSource,
    /// Site count of the generated curve when no schedule is given.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Segments of the generated curve.
    #[arg(long, default_value_t = 4)]
    pub segments: usize,
    /// Segment width of the generated curve.
    #[arg(long, default_value_t = 0.25)]
    pub dt: f64,
    /// Penalty for the slice-width sweep (default 9^n).
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Slice width for the penalty sweep.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
