//! `kscoal`: solve static coalition instances, run territory-defense
//! scenarios, verify the engine against the brute-force oracles, and sweep
//! chain budgets.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error, 3 round
//! limit reached (the anytime result is still written).

mod commands;
mod policy;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "kscoal", version, about = "Distributed K-serial stable coalition formation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a static instance file and write the assignment and run statistics.
    Solve(SolveArgs),
    /// Run a territory-defense scenario.
    Simulate(SimulateArgs),
    /// Check engine outputs against the oracles.
    Verify(VerifyArgs),
    /// Sweep chain budgets over a random instance family, or seeds over a scenario.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Chain budgets: instance, uniform:N or list:K1,K2,...
    #[arg(long, default_value = "instance")]
    k: String,
    /// Initial assignment: idle, greedy, previous:FILE or fixed:TASKS.
    #[arg(long, default_value = "idle")]
    warm: String,
    /// Round limit.
    #[arg(long, default_value_t = 500)]
    rounds: usize,
    /// Minimum utility gain counted as an improvement.
    #[arg(long, default_value_t = 1e-9)]
    epsilon: f64,
    /// Extra rounds every message spends in flight.
    #[arg(long, default_value_t = 0)]
    delay: u64,
    /// Independent per-message drop probability.
    #[arg(long, default_value_t = 0.0)]
    drop: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output JSON file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario JSON file; built-in defaults if omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the scenario horizon.
    #[arg(long)]
    horizon: Option<u64>,
    /// Disable planning; every robot stays idle.
    #[arg(long)]
    no_coordination: bool,
    /// Directory for steps.jsonl, summary.json and trace.csv.
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-body pose trace.
    #[arg(long)]
    trace: bool,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["instances", "random"])))]
struct VerifyArgs {
    /// Directory of NAME.instance.json files with optional NAME.report.json goldens.
    #[arg(long)]
    instances: Option<PathBuf>,
    /// Number of random instances.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 6)]
    max_robots: usize,
    #[arg(long, default_value_t = 4)]
    max_tasks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Complete graphs with k = N, also checking global optimality.
    #[arg(long)]
    complete: bool,
    /// Write every random case as an instance/report fixture pair.
    #[arg(long)]
    emit_fixtures: Option<PathBuf>,
    /// Write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// default, a JSON file, or overrides such as n=20,m=8,graph=disk:100:35.
    #[arg(long, default_value = "default")]
    instance_family: String,
    /// Uniform chain budgets to sweep.
    #[arg(long, default_value = "1,2,3")]
    k_sweep: String,
    /// Instances per budget, or seeds for a scenario.
    #[arg(long, default_value_t = 30)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run a scenario over consecutive seeds instead of the instance sweep.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output CSV file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    VerifyFailed = 1,
    InputError = 2,
    Anytime = 3,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("KSCOAL_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Verify(a) => commands::verify(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Status::InputError as u8)
        }
    }
}
