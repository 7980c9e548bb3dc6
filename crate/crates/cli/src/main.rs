//! `ffv`: build verification protocols, measure their gaps, evaluate the
//! sample-count formulas and simulate verification runs.

mod commands;
mod instance;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::instance::InstanceArgs;
use crate::output::Format;

#[derive(Parser, Debug)]
#[command(
    name = "ffv",
    version,
    about = "Ground-state verification protocols for frustration-free Hamiltonians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format (defaults to csv for `compare`, json otherwise)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output to FILE instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact spectral gap of a protocol next to every applicable bound
    Gap(GapArgs),
    /// Closed-form sample counts
    Samples(SamplesArgs),
    /// Sample-cost table for closed chains against competing protocols
    Compare(CompareArgs),
    /// Randomized invariant suite; exits with 4 on any violation
    CheckBounds(CheckArgs),
    /// Monte Carlo verification runs on a noisy state
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum ColoringChoice {
    Auto,
    Trivial,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Probabilities {
    Uniform,
    Proportional,
}

#[derive(Args, Debug, Clone)]
struct ProtocolArgs {
    /// Bond tests: a catalog design, a design JSON file, `isotropic` or `projective`
    #[arg(long, default_value = "icosahedron", value_name = "NAME|FILE")]
    design: String,
    #[arg(long, value_enum, default_value = "auto")]
    coloring: ColoringChoice,
    #[arg(long = "p", value_enum, default_value = "uniform")]
    probabilities: Probabilities,
}

#[derive(Args, Debug)]
struct GapArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Also search edge orderings for the smallest ζ
    #[arg(long)]
    optimize_ordering: bool,
    /// Precision used for the sample counts in CSV output
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Preset {
    /// Closed spin-1 chain: m = 2, ν_E = 2/5, γ = 0.350, s = 1/2, g = 2
    Chain,
    /// Honeycomb spin-3/2 lattice: m = 3, ν_E = 2/7, γ = 0.10, s = 1/2, g = 4
    Honeycomb,
}

#[derive(Args, Debug)]
struct SamplesArgs {
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Known spectral gap ν of the verification operator
    #[arg(long)]
    nu: Option<f64>,
    /// Number of matchings
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    nu_e: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    g: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long, default_value_t = 20)]
    n_min: usize,
    #[arg(long, default_value_t = 200)]
    n_max: usize,
    #[arg(long, default_value_t = 2)]
    n_step: usize,
    /// Hamiltonian gap; the default is the infinite-chain value
    #[arg(long, default_value_t = 0.350)]
    gamma: f64,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    /// Use the full BHSRE cost with this α instead of its lower bound
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, default_value_t = 30)]
    instances: u64,
    /// Add an instance whose first term is not a projector
    #[arg(long)]
    inject_broken_projector: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[arg(
        long,
        default_value = "worst_case",
        value_name = "worst_case|depolarizing|coherent_rotation"
    )]
    noise: String,
    /// Infidelity of the prepared state
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Tests per run; defaults to the minimum count for (ν, ε, δ)
    #[arg(long = "tests", value_name = "N")]
    n_tests: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    /// Single-test draws for the pass-rate estimate (0 skips it)
    #[arg(long, default_value_t = 100_000)]
    draws: u64,
    /// Perform every test of a run even after a failure
    #[arg(long)]
    full_runs: bool,
    /// Write per-run results as CSV
    #[arg(long, value_name = "FILE")]
    per_run: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
