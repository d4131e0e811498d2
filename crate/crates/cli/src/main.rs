use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use confetti::harness::VERSION;
use confetti::ConfettiShape;

mod commands;
mod settings;

#[derive(Parser)]
#[command(name = "confetti", version = VERSION, about = "Monte Carlo lab for two-colour confetti percolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one crossing probability.
    Simulate(SimulateArgs),
    /// Coupled sweep over a p grid, or over t along the interpolation path.
    Sweep(SweepArgs),
    /// Locate the critical point by bisection and a logistic fit.
    Pc(PcArgs),
    /// Long-way crossings at p = 1/2 across scales.
    Rsw(RswArgs),
    /// Robust k-level crossings against the continuum crossing.
    DiscretizeCompare(CompareArgs),
    /// Write PPM (and optionally SVG) pictures of one configuration.
    Render(RenderArgs),
    /// Exact probabilities, influences, and boosters of a boolean function.
    Threshold(ThresholdArgs),
}

/// Options shared by every sampling subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON file with keys shape, lambda, p, window, seed, depth_policy.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Black fraction; a comma-separated grid where the subcommand sweeps.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["lambda_black", "lambda_white"])]
    pub p: Vec<f64>,
    /// Total intensity.
    #[arg(long, conflicts_with_all = ["lambda_black", "lambda_white"])]
    pub lambda: Option<f64>,
    #[arg(long, requires = "lambda_white")]
    pub lambda_black: Option<f64>,
    #[arg(long, requires = "lambda_black")]
    pub lambda_white: Option<f64>,
    /// Raster pitch h.
    #[arg(long)]
    pub pitch: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `disk` or `square:<halfwidth>`.
    #[arg(long)]
    pub shape: Option<ConfettiShape>,
    /// Directory for CSV/JSON/image outputs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Fail with exit code 3 if a raster breaks black-8/white-4 duality.
    #[arg(long)]
    pub assert_duality: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Rectangle height; the rectangle is `[0, aspect·s] × [0, s]`.
    #[arg(long, default_value_t = 20.0)]
    pub s: f64,
    #[arg(long, default_value_t = 3.0)]
    pub aspect: f64,
    /// Also report the robust k-level crossing of the same-size centred rectangle.
    #[arg(long)]
    pub k: Option<u32>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 20.0)]
    pub s: f64,
    #[arg(long, default_value_t = 3.0)]
    pub aspect: f64,
    /// Interpolation grid; switches to the robust crossing along the path.
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
    /// End point of the interpolation path (> 1/2).
    #[arg(long)]
    pub p_target: Option<f64>,
    /// Discretization level for the robust crossing.
    #[arg(long)]
    pub k: Option<u32>,
}

#[derive(Args, Debug)]
pub struct PcArgs {
    #[command(flatten)]
    pub common: Common,
    /// Side of the square whose horizontal crossing is tracked.
    #[arg(long, default_value_t = 20.0)]
    pub s: f64,
    /// Initial bracket `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.3, 0.7])]
    pub bracket: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,
}

#[derive(Args, Debug)]
pub struct RswArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_values_t = [5.0, 10.0, 20.0, 40.0])]
    pub s: Vec<f64>,
    #[arg(long, default_value_t = 3.0)]
    pub aspect: f64,
    #[arg(long, default_value_t = confetti::harness::DEFAULT_RSW_FLOOR)]
    pub floor: f64,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    /// Side of the centred square.
    #[arg(long, default_value_t = 4.0)]
    pub side: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [3u32, 4, 5, 6])]
    pub k: Vec<u32>,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[command(flatten)]
    pub common: Common,
    /// Side of the centred square region (ignored when the config sets a window).
    #[arg(long, default_value_t = 10.0)]
    pub s: f64,
    #[arg(long, default_value_t = 20.0)]
    pub pixels_per_unit: f64,
    /// Also write an SVG of the leaf outlines.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    /// `dictator|or|and|parity[:<n>]`, `majority:<n>`, or `table:<hexfile>`.
    #[arg(long)]
    pub function: String,
    /// Coordinate probabilities; a single value is used for every coordinate.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub p: Vec<f64>,
    /// Booster search `K,tau`.
    #[arg(long)]
    pub boosters: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Pc(a) => commands::pc(a),
        Command::Rsw(a) => commands::rsw(a),
        Command::DiscretizeCompare(a) => commands::discretize_compare(a),
        Command::Render(a) => commands::render(a),
        Command::Threshold(a) => commands::threshold(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_assertion() { 3 } else { 2 })
        }
    }
}
