//! `vrp-benchlab`: run, compare and chart CVRP solver experiments.
//!
//! Exit status is 0 on success, 1 for a negative result (infeasible
//! solution, non-equivalent comparison, failed runs or downloads) and 2 for
//! usage or input errors.

mod analysis;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vrp-benchlab", version, about = "Benchmarking harness for CVRP solvers")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only print errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a solution file against an instance.
    Validate(ValidateArgs),
    /// Execute an experiment plan, resuming from existing results.
    Run(RunArgs),
    /// Print the results table and Wilcoxon decisions.
    Compare(CompareArgs),
    /// Write a chart and its data table.
    Charts(ChartsArgs),
    /// Write generated instances.
    Generate(GenerateArgs),
    /// Download instances and best known solutions into a cache.
    Fetch(FetchArgs),
    /// Run the built-in reference solver as an external process.
    #[command(hide = true)]
    Solve(SolveArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Numbering {
    NodeId,
    Cvrplib,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    /// How customer ids in the solution file are numbered.
    #[arg(long, value_enum, default_value = "node-id")]
    numbering: Numbering,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Result file; defaults to `results.jsonl` next to the plan.
    #[arg(long)]
    results: Option<PathBuf>,
}

/// Inputs shared by `compare` and `charts`.
#[derive(Debug, Args)]
struct DataArgs {
    /// Result files written by `run`.
    #[arg(long, num_args = 1..)]
    results: Vec<PathBuf>,
    /// Published results: `solver,instance,avg_cost,time,cpu_name` rows.
    #[arg(long, num_args = 1..)]
    published: Vec<PathBuf>,
    /// Extra BKS values: `name,bks,reference` rows.
    #[arg(long)]
    bks: Option<PathBuf>,
    /// CPU ratings: `cpu_name,rating,base` rows.
    #[arg(long)]
    ratings: Option<PathBuf>,
    /// Base CPU for time normalization; overrides the `base` column.
    #[arg(long)]
    base_cpu: Option<String>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0.025)]
    alpha0: f64,
    #[arg(long, default_value_t = 2)]
    n_comparisons: usize,
    /// Solver tested against all others; defaults to the first one.
    #[arg(long)]
    reference: Option<String>,
    /// Paired per-instance gaps: `instance,gap_a,gap_b` rows.
    #[arg(long)]
    paired: Option<PathBuf>,
    /// Precomputed p-values: `comparison,p_h0,p_h1[,p_opposite]` rows.
    #[arg(long)]
    pvalues: Option<PathBuf>,
    /// Also write table.txt, table.csv and decisions.csv here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChartKind {
    Performance,
    Convergence,
    Boxplot,
}

#[derive(Debug, Args)]
struct ChartsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    kind: ChartKind,
    /// Output directory for `<kind>.svg` and `<kind>.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Depot {
    Central,
    Eccentric,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Customers {
    UniformRandom,
    Clustered,
    Mixed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Demand {
    Unit,
    Uniform,
    SmallLargeMix,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// TOML spec; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "n")]
    n_customers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    depot: Option<Depot>,
    #[arg(long, value_enum)]
    customers: Option<Customers>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long, value_enum)]
    demand: Option<Demand>,
    #[arg(long)]
    demand_lo: Option<u64>,
    #[arg(long)]
    demand_hi: Option<u64>,
    /// Target mean number of customers per route.
    #[arg(long)]
    route_size: Option<f64>,
    #[arg(long)]
    grid: Option<u32>,
    /// Generate a suite over these sizes (comma separated).
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Seeds for the suite (comma separated).
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FetchArgs {
    /// Instance names, e.g. X-n101-k25.
    #[arg(required = true)]
    names: Vec<String>,
    #[arg(long, default_value = "cache")]
    cache_dir: PathBuf,
    /// Serve from the cache only.
    #[arg(long)]
    offline: bool,
    #[arg(long)]
    source_url: Option<String>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    time_limit: f64,
    #[arg(long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .init();
    let result = match cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Run(a) => commands::run(a),
        Command::Compare(a) => commands::compare(a),
        Command::Charts(a) => commands::charts(a),
        Command::Generate(a) => commands::generate(a),
        Command::Fetch(a) => commands::fetch(a),
        Command::Solve(a) => commands::solve(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
