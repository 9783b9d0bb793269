//! Command-line definitions. Every tunable is optional so that a
//! `--config` file can supply it.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "qbai", version, about = "Quantum best-arm identification experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fixed-confidence best-arm identification
    Bestarm(RunArgs),
    /// Find an eps-optimal arm
    Pac(RunArgs),
    /// Hardness sweep with CSV output and scaling fits
    Sweep(SweepArgs),
    /// Classical baselines: uniform sampling and successive elimination
    Baseline(RunArgs),
    /// Adversary lower bound
    Bound(BoundArgs),
    /// Property suites
    Validate(ValidateArgs),
    /// Fixed-budget identification by majority vote
    Fixedbudget(FixedBudgetArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct InstanceArgs {
    /// Comma-separated biases, e.g. 0.9,0.1
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<f64>>,

    /// JSON instance file {"p": [...]}
    #[arg(long)]
    pub file: Option<PathBuf>,

    /// key = value file with defaults for any flag
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,

    #[arg(long)]
    pub delta: Option<f64>,

    /// Accuracy for `pac`
    #[arg(long)]
    pub eps: Option<f64>,

    /// Known gap for the uniform baseline (defaults to the true gap)
    #[arg(long)]
    pub gap: Option<f64>,

    #[arg(long)]
    pub trials: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    /// uniform-gap, geometric-gap or two-cluster
    #[arg(long)]
    pub family: Option<String>,

    /// Sweep a single instance from file instead of a family
    #[arg(long)]
    pub file: Option<PathBuf>,

    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Arm counts
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,

    /// Second gaps as powers of two: 2,4 means 2^-2 and 2^-4
    #[arg(long, value_delimiter = ',')]
    pub gap_exponents: Option<Vec<i32>>,

    /// Ratio between consecutive gaps of geometric-gap
    #[arg(long)]
    pub gamma: Option<f64>,

    #[arg(long)]
    pub delta: Option<f64>,

    /// Trials per instance
    #[arg(long)]
    pub trials: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// CSV destination (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Optional gnuplot data file of per-instance means
    #[arg(long)]
    pub dat: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,

    #[arg(long)]
    pub delta: Option<f64>,

    /// Bias floor p with every bias in [p, 1 - p]; defaults to the tightest one
    #[arg(long)]
    pub p_floor: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ValidateArgs {
    /// quick or full
    #[arg(long)]
    pub level: Option<String>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, hide = true)]
    pub inject_gae_flip: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FixedBudgetArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,

    /// Modeled-cost budget T
    #[arg(long)]
    pub budget: Option<f64>,

    /// Cost caps as delta:tc pairs, e.g. 0.1:2e13,0.3:1e13; calibrated when absent
    #[arg(long, value_delimiter = ',')]
    pub tc: Option<Vec<String>>,

    /// Runs per delta when calibrating the caps
    #[arg(long)]
    pub calibration_runs: Option<usize>,

    #[arg(long)]
    pub trials: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,
}
