use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sgb_core::{Metric, Policy};

#[derive(Debug, Parser)]
#[command(name = "sgb", version, about = "Similarity group-by over CSV tables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Group a CSV table and print the groups.
    Run(RunArgs),
    /// Check that the output does not depend on input order.
    Check(CheckArgs),
    /// Group with the brute-force reference implementation.
    Oracle(RunArgs),
    /// Time the engine on synthetic clustered data.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    L2,
    Linf,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::L2 => Metric::L2,
            MetricArg::Linf => Metric::LInf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OverlapArg {
    Duplicate,
    Eliminate,
    NewGroup,
}

impl From<OverlapArg> for Policy {
    fn from(o: OverlapArg) -> Self {
        match o {
            OverlapArg::Duplicate => Policy::Duplicate,
            OverlapArg::Eliminate => Policy::Eliminate,
            OverlapArg::NewGroup => Policy::NewGroup,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Either `--query` or `--columns` + `--eps` (+ `--metric`, `--on-overlap`).
#[derive(Debug, Clone, Args)]
pub struct Grouping {
    /// Query text, e.g. "SELECT count(*) FROM t GROUP BY x, y DISTANCE-TO-ALL L2 WITHIN 1".
    #[arg(long, conflicts_with_all = ["columns", "eps"], required_unless_present = "columns")]
    pub query: Option<String>,

    /// Comma-separated grouping columns.
    #[arg(long, value_delimiter = ',', requires = "eps")]
    pub columns: Vec<String>,

    #[arg(long, value_enum, default_value = "l2", conflicts_with = "query")]
    pub metric: MetricArg,

    #[arg(long)]
    pub eps: Option<f64>,

    #[arg(long, value_enum, default_value = "duplicate", conflicts_with = "query")]
    pub on_overlap: OverlapArg,
}

#[derive(Debug, Clone, Args)]
pub struct EngineFlags {
    /// Disable the group R-tree and per-group point indexes.
    #[arg(long)]
    pub no_index: bool,

    /// Disable rectangle and hull bounds (all-pairs distance checks).
    #[arg(long)]
    pub no_bounds: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub input: PathBuf,

    #[command(flatten)]
    pub grouping: Grouping,

    #[arg(long, value_enum, default_value = "json")]
    pub output: OutputFormat,

    #[command(flatten)]
    pub engine: EngineFlags,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub input: PathBuf,

    #[command(flatten)]
    pub grouping: Grouping,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Number of shuffled orders compared against the input order.
    #[arg(long, default_value_t = 50)]
    pub permutations: usize,

    /// Try every order instead of sampling (small inputs only).
    #[arg(long)]
    pub exhaustive: bool,

    #[command(flatten)]
    pub engine: EngineFlags,

    /// Replace the engine with an order-dependent greedy grouping.
    #[arg(long, hide = true)]
    pub inject_order_bug: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Comma-separated dataset sizes, ascending.
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000")]
    pub sizes: Vec<usize>,

    /// Number of blobs; defaults to n / 64 for each size.
    #[arg(long)]
    pub clusters: Option<usize>,

    /// Grouping threshold. Blobs are generated to be cliques at 1.0.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,

    #[arg(long, value_enum, default_value = "l2")]
    pub metric: MetricArg,

    #[arg(long, value_enum, default_value = "duplicate")]
    pub on_overlap: OverlapArg,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Skip the all-pairs baseline.
    #[arg(long)]
    pub no_baseline: bool,
}
