use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Feasible reward sets for inverse RL with sub-optimal experts.
#[derive(Parser, Debug)]
#[command(name = "irlse", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test whether a reward belongs to the feasible set (exit 0 if so, 1 if not).
    Check {
        problem: PathBuf,
        reward: PathBuf,
        #[arg(long, default_value_t = irlse_core::feasible::DEFAULT_TOL)]
        tol: f64,
    },
    /// Sample the problem uniformly and write the plug-in problem.
    Estimate(EstimateArgs),
    /// Hausdorff distance between the feasible sets of two problems.
    Hausdorff(HausdorffArgs),
    /// Estimation runs over a grid of sample sizes and seeds, as CSV.
    Sweep(SweepArgs),
    /// Write a problem from one of the built-in families.
    Lb(LbArgs),
    /// Caps on zeta and the two volume bounds.
    Volume { problem: PathBuf },
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    pub problem: PathBuf,
    /// Rounds of uniform sampling.
    #[arg(long, conflicts_with_all = ["epsilon", "delta"], required_unless_present = "epsilon")]
    pub m: Option<u64>,
    /// Target accuracy; the number of rounds is derived from the error bound.
    #[arg(long, requires = "delta")]
    pub epsilon: Option<f64>,
    #[arg(long, requires = "epsilon")]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeArg {
    Exact,
    Lower,
}

#[derive(Args, Debug)]
pub struct HausdorffArgs {
    pub problem_a: PathBuf,
    pub problem_b: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    /// Random objectives per set in lower-bound mode.
    #[arg(long, default_value_t = 64)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also print the report as one JSON line.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub problem: PathBuf,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub t_grid: Vec<u64>,
    /// Number of seeds per sample size.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Hausdorff mode; exact when the reward dimension allows it by default.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value_t = 64)]
    pub budget: usize,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Fig1,
    LbChain,
    LbTree,
    LbSubopt,
    Random,
}

#[derive(Args, Debug)]
pub struct LbArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub xi: f64,
    #[arg(long, default_value_t = 1)]
    pub s_bar: usize,
    #[arg(long, default_value_t = 2)]
    pub actions: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Perturbed pair `j,k` of the chain family (1-based j, 0-based k).
    #[arg(long, value_delimiter = ',')]
    pub variant: Option<Vec<usize>>,
    /// Signs of the tree family, e.g. `1,-1`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub signs: Option<Vec<i8>>,
    /// Signs of the alternative tree instance.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alt_signs: Option<Vec<i8>>,
    #[arg(long, default_value_t = 0.25)]
    pub pi_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Variant state of the sub-optimal-expert family (1-based).
    #[arg(long)]
    pub variant_state: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub states: usize,
    #[arg(long, default_value_t = 1)]
    pub experts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub xi_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub xi_hi: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the alternative instance of a paired family.
    #[arg(long)]
    pub alt_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { problem, reward, tol } => commands::check(&problem, &reward, tol),
        Command::Estimate(args) => commands::estimate(&args),
        Command::Hausdorff(args) => commands::hausdorff(&args),
        Command::Sweep(args) => commands::sweep(&args),
        Command::Lb(args) => commands::lb(&args),
        Command::Volume { problem } => commands::volume(&problem),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("irlse: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
