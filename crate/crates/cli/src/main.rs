//! `ctcov`: combinatorial coverage of neuron activations and coverage-guided
//! test generation for ReLU classifiers.

mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::failure::Failure;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DEEPCT_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "ctcov",
    version,
    about = "Combinatorial coverage of neuron activations in ReLU classifiers"
)]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Measure the coverage of an existing suite and write a report.
    Coverage(CoverageArgs),
    /// Generate tests around seed inputs, randomly or guided by coverage.
    Generate(GenerateArgs),
    /// Write a deterministic pseudo-random model, and optionally seeds for it.
    MakeFixture(FixtureArgs),
    /// Encode one coverage target as a linear program and solve it.
    Encode(EncodeArgs),
    /// Combine two generation reports and count shared robustness issues.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct CoverageOpts {
    /// Combination size t.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
    t: u8,

    /// Completeness threshold p in [0, 1]; repeatable.
    #[arg(long = "p", value_parser = parse_unit, default_values_t = [0.5, 0.75])]
    p: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct CoverageArgs {
    /// Model file; required with --inputs.
    #[arg(long)]
    model: Option<PathBuf>,

    /// Dataset or suite file whose inputs are run through the model.
    #[arg(
        long,
        visible_alias = "seeds",
        requires = "model",
        conflicts_with = "signatures"
    )]
    inputs: Option<PathBuf>,

    /// Precomputed activation signatures, one record per line.
    #[arg(long, required_unless_present = "inputs")]
    signatures: Option<PathBuf>,

    #[command(flatten)]
    coverage: CoverageOpts,

    /// Where to write the report.
    #[arg(long)]
    out_report: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Random,
    Ct,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    model: PathBuf,

    /// Dataset of seed inputs; misclassified records are skipped.
    #[arg(long)]
    seeds: PathBuf,

    #[arg(long, value_enum, default_value_t = MethodArg::Ct)]
    method: MethodArg,

    #[command(flatten)]
    coverage: CoverageOpts,

    /// L∞ budget.
    #[arg(long, default_value_t = 0.15, value_parser = parse_positive)]
    d: f64,

    /// Activation margin in the target encoding.
    #[arg(long, default_value_t = 1e-4, value_parser = parse_positive)]
    epsilon: f64,

    /// Random method: tests per seed.
    #[arg(long, conflicts_with = "total")]
    n: Option<usize>,

    /// Random method: total tests, split evenly over the seeds.
    #[arg(long)]
    total: Option<usize>,

    /// Guided method: wall-clock limit per seed, in seconds.
    #[arg(long, value_parser = parse_positive)]
    time_limit_s: Option<f64>,

    /// Guided method: cap on LP solves per seed and layer.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_solves_per_layer: Option<u64>,

    #[arg(long, default_value_t = 0)]
    rng_seed: u64,

    #[arg(long)]
    out_suite: PathBuf,

    #[arg(long)]
    out_report: PathBuf,
}

#[derive(Args, Debug)]
pub struct FixtureArgs {
    /// Layer widths from input to output, e.g. 36-16-8-16-4.
    #[arg(long)]
    widths: String,

    #[arg(long, default_value_t = 0)]
    rng_seed: u64,

    /// Where to write the model.
    #[arg(long)]
    out: PathBuf,

    /// Also write this many seeds, labelled with the model's own predictions.
    #[arg(long, requires = "out_seeds")]
    n_seeds: Option<usize>,

    #[arg(long, requires = "n_seeds")]
    out_seeds: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    #[arg(long)]
    model: PathBuf,

    #[arg(long)]
    seeds: PathBuf,

    /// Id of the seed record to perturb.
    #[arg(long)]
    seed_id: u64,

    /// Hidden layer of the target, counting from 0.
    #[arg(long)]
    layer: usize,

    /// Comma-separated neuron indices of the combination, e.g. 0,2.
    #[arg(long, value_delimiter = ',', required = true)]
    neurons: Vec<usize>,

    /// Target bits, one per neuron, e.g. 01.
    #[arg(long)]
    config: String,

    #[arg(long, default_value_t = 0.15, value_parser = parse_positive)]
    d: f64,

    #[arg(long, default_value_t = 1e-4, value_parser = parse_positive)]
    epsilon: f64,

    /// Write the linear program in text form to this file.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Two reports from `generate` over the same seed ids.
    #[arg(long = "report", num_args = 1, required = true)]
    reports: Vec<PathBuf>,

    #[arg(long)]
    out_report: PathBuf,
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("{THREADS_ENV}={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::runtime(anyhow::anyhow!("cannot start {threads} workers: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    match cli.command {
        Command::Coverage(args) => commands::coverage(&args),
        Command::Generate(args) => commands::generate(&args),
        Command::MakeFixture(args) => commands::make_fixture(&args),
        Command::Encode(args) => commands::encode(&args),
        Command::Compare(args) => commands::compare(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(failure::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
