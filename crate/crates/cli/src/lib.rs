//! The `ctbn` command-line tool.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ctbn", version, args_override_self = true, about = "Structure learning for binary continuous-time Bayesian networks")]
pub struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// TOML file whose keys mirror the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample trajectories from a generator or a model file.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Fit the penalized path, select, threshold and write the edge list.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Replicated simulation study with power / FDR / MD summaries.
    #[command(args_override_self = true)]
    Experiment(ExperimentArgs),
    /// Cone invertibility bound and time / penalty bounds for a model.
    #[command(args_override_self = true)]
    Theory(TheoryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    Stationary,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BicN {
    /// Jumps of the transition being fitted.
    Transition,
    /// All jumps of the data.
    Total,
}

#[derive(Debug, Clone, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct ModelSource {
    /// Chain generator.
    #[arg(long, group = "source")]
    pub m1: bool,
    /// Five-node dense generator plus independent nodes.
    #[arg(long, group = "source")]
    pub m2: bool,
    /// Model JSON file.
    #[arg(long, group = "source", value_name = "FILE")]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// Number of nodes for a generator.
    #[arg(long)]
    pub d: Option<usize>,
    /// Observation horizon.
    #[arg(long = "T", value_name = "T")]
    pub horizon: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = StartArg::Stationary)]
    pub start: StartArg,
    #[arg(long, default_value = "ctbn-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 100)]
    pub grid_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lambda_min_ratio: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    /// Initial Lipschitz estimate.
    #[arg(long, default_value_t = 1.0)]
    pub l0: f64,
    /// Backtracking growth factor.
    #[arg(long, default_value_t = 2.0)]
    pub backtrack: f64,
    /// Sample size used by BIC and GIC.
    #[arg(long, value_enum, default_value_t = BicN::Transition)]
    pub bic_n: BicN,
    /// Comma-separated GIC thresholds; defaults to the realized magnitudes.
    #[arg(long, value_delimiter = ',')]
    pub delta_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Trajectory JSON files, pooled into one set of statistics.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Read sufficient-statistics JSON instead of trajectories.
    #[arg(long)]
    pub stats: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "ctbn-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[group(id = "generator", required = true, multiple = false)]
pub struct Generator {
    #[arg(long, group = "generator")]
    pub m1: bool,
    #[arg(long, group = "generator")]
    pub m2: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub generator: Generator,
    #[arg(long)]
    pub d: usize,
    #[arg(long = "T", value_name = "T")]
    pub horizon: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "ctbn-out")]
    pub out: PathBuf,
}

fn parse_xi(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 1.0 {
        Ok(v)
    } else {
        Err(format!("xi must be finite and > 1, got {s}"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct TheoryArgs {
    /// Model JSON file; it must carry log-linear coefficients.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long, value_parser = parse_xi, default_value = "2")]
    pub xi: f64,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    /// Horizon for the penalty window; defaults to the minimal admissible one.
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<f64>,
    /// Random cone directions for the empirical factor diagnostic (0 skips it).
    #[arg(long, default_value_t = 0)]
    pub cone_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "ctbn-out")]
    pub out: PathBuf,
}

/// Parses `argv` (with any `--config` file spliced in) and runs the command.
pub fn run(argv: Vec<String>) -> Result<()> {
    let argv = match config::config_path(&argv) {
        Some(path) => {
            let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read config {path}"))?;
            let cfg = config::parse_config(&text).with_context(|| format!("in config {path}"))?;
            config::splice(&argv, &cfg)
        }
        None => argv,
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let threads = if cli.threads == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        cli.threads
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("cannot start the worker pool")?;
    pool.install(|| match &cli.command {
        Command::Simulate(a) => commands::simulate(a, threads),
        Command::Fit(a) => commands::fit(a, threads),
        Command::Experiment(a) => commands::experiment(a, threads),
        Command::Theory(a) => commands::theory(a, threads),
    })
}
