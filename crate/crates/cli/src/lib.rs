//! Command-line front end: instance formats, reports and the `acmpc` subcommands.

pub mod commands;
pub mod io;
pub mod report;
pub mod suite;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "acmpc",
    version,
    about = "Mixed packing-covering feasibility solver"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide eps-feasibility of an instance file.
    Solve(SolveArgs),
    /// Approximate the densest-subgraph density of an edge list.
    Dsg(DsgArgs),
    /// Write the width-reduced instance and its column map.
    Normalize(NormalizeArgs),
    /// Solve a seeded random suite and write one CSV row per solve.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub eps: f64,
    /// Oracle accuracy, defaults to eps/2.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<u64>,
    /// Interval between gap checks, in iterations.
    #[arg(long)]
    pub trace_every: Option<u64>,
    /// Write the gap trace (t, gap, envelope) as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub output: OutputFormat,
    /// Leave wall-clock times out of the report.
    #[arg(long)]
    pub omit_timings: bool,
}

#[derive(Debug, Args)]
pub struct DsgArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_enum, default_value = "json")]
    pub output: OutputFormat,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Normalized instance path; the column map goes to `<output>.colmap.json`.
    #[arg(long)]
    pub output: PathBuf,
    /// Add the rows `x_j ≤ 1` the solver uses to keep the box before reducing.
    #[arg(long)]
    pub unit_box: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlantingArg {
    Feasible,
    Infeasible,
    Unplanted,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "random")]
    pub suite: Suite,
    /// Column counts; each instance has as many packing and covering rows.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Fraction of columns stored in each row.
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "feasible")]
    pub planting: PlantingArg,
    #[arg(long)]
    pub max_iters: Option<u64>,
    /// Run every solve to its full budget.
    #[arg(long)]
    pub no_early_exit: bool,
    /// Leave the wall_time column empty.
    #[arg(long)]
    pub omit_timings: bool,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Dsg(a) => commands::dsg(&a),
        Command::Normalize(a) => commands::normalize(&a),
        Command::Bench(a) => commands::bench(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
