//! Command-line front end for `mmskit-core` with a JSON interchange format.

pub mod commands;
pub mod error;
pub mod json;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use mmskit_core::DEFAULT_NODE_BUDGET;

pub use commands::{run, Report};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "mmskit", version, about = "Exact maximin-share fair division")]
pub struct Cli {
    /// Node budget of every exact MMS search.
    #[arg(long, global = true, env = "MMSKIT_NODE_BUDGET", default_value_t = DEFAULT_NODE_BUDGET)]
    pub node_budget: u64,

    /// Write the JSON report here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact MMS values and witness partitions.
    Mms {
        /// Instance file, or `-` for standard input.
        instance: String,
        /// Number of parts (defaults to the number of agents).
        #[arg(long)]
        d: Option<usize>,
        /// Only this agent (0-indexed).
        #[arg(long)]
        agent: Option<usize>,
    },
    /// Ordinal bag filling. Without `--d` (or with `--d 4⌈n/3⌉`) the full
    /// reduction pipeline runs and its guarantee is checked; any other `d`
    /// runs the bag filling directly on an ordered, `d`-normalized instance.
    Ordinal {
        instance: String,
        #[arg(long)]
        d: Option<usize>,
    },
    /// Reductions followed by bag filling under a priority ranking.
    Rbf {
        instance: String,
        /// `guaranteed` or a comma-separated list indexed by rank.
        #[arg(long, default_value = "guaranteed")]
        thresholds: String,
        /// `identity`, `rotation:K`, or a comma-separated rank per agent.
        #[arg(long, default_value = "identity")]
        ranking: String,
        #[arg(long, value_enum, default_value_t = BagChoiceArg::LowestIndex)]
        bag_choice: BagChoiceArg,
    },
    /// Uniform lottery over the cyclic rank rotations.
    Bobw {
        instance: String,
        #[arg(long, default_value = "guaranteed")]
        thresholds: String,
        /// Also draw one allocation from the lottery.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Writes a generated instance.
    Gen {
        #[command(subcommand)]
        family: Family,
    },
    /// Checks an allocation (or any report with an `allocation` field).
    Verify {
        instance: String,
        allocation: String,
        #[arg(long, value_enum)]
        mode: VerifyMode,
        /// Number of parts for `1ood`.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value = "guaranteed")]
        thresholds: String,
        #[arg(long, default_value = "identity")]
        ranking: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BagChoiceArg {
    LowestIndex,
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyMode {
    /// Every agent gets her `MMS^d`.
    #[value(name = "1ood")]
    OneOutOfD,
    /// Every agent gets `τ_rank · MMS^n`.
    Tmms,
}

#[derive(Debug, Subcommand)]
pub enum Family {
    /// Integer values drawn uniformly.
    Random {
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        goods: usize,
        #[arg(long, default_value_t = 10)]
        max_value: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Ordered instance where every agent has a `d`-partition of parts worth 1.
    Normalized {
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        goods: usize,
        /// Defaults to the number of agents.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 9)]
        max_weight: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Identical valuations on which ordinal bag filling misses `⌊(4n-2)/3⌋`.
    OrdinalTight {
        #[arg(long)]
        n: usize,
    },
    /// Hard instance for rank `i` (1-indexed).
    Hard1 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        i: usize,
        /// `1/ε`; defaults to the value matching thresholds `α_i + 1/1000`.
        #[arg(long)]
        epsilon_inv: Option<usize>,
    },
    /// Truthful valuation of the oblivious construction.
    Hard2 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        i: usize,
        #[arg(long)]
        k1: usize,
        #[arg(long)]
        k2: usize,
        #[arg(long, default_value_t = 3)]
        t: usize,
    },
}
