//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bloc-infer", version, about = "Infer voting blocs from municipal referendum returns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sampler on a vote table and write samples plus all summaries.
    Infer(InferArgs),
    /// Recompute summaries from stored samples.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic vote table with known blocs.
    Simulate(SimulateArgs),
    /// Run the simulation-recovery experiment over a grid of settings.
    Recover(RecoverArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PriorArgs {
    /// Gamma shape of the Beta-binomial parameters.
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Gamma scale of the Beta-binomial parameters.
    #[arg(long, default_value_t = 10.0)]
    pub theta: f64,
    /// Poisson mean of the number of blocs.
    #[arg(long, default_value_t = 10.0)]
    pub lambda: f64,
    /// Symmetric Dirichlet concentration of the bloc weights.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Birth rate of the birth-death process [default: lambda].
    #[arg(long)]
    pub beta_birth: Option<f64>,
    /// Largest number of blocs.
    #[arg(long, default_value_t = 30)]
    pub k_max: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long, default_value_t = 20_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Virtual time of birth-death simulation per iteration.
    #[arg(long, default_value_t = 1.0)]
    pub bd_time: f64,
    /// Number of blocs in the starting state [default: round(lambda)].
    #[arg(long)]
    pub initial_k: Option<usize>,
    /// Parameter update schedule: alternate, sampler1 or sampler2.
    #[arg(long, default_value = "alternate")]
    pub schedule: String,
}

#[derive(Debug, Clone, Args)]
pub struct SummaryArgs {
    /// Number of blocs in the representative clustering [default: posterior mode].
    #[arg(long)]
    pub k_star: Option<usize>,
    /// Predictive Beta draws per retained sample.
    #[arg(long, default_value_t = 100)]
    pub draws: usize,
    /// Pseudocount added to yes and no before the log-ratio transform.
    #[arg(long, default_value_t = 0.5)]
    pub pseudocount: f64,
    /// Bloc pairs for the polarization series, e.g. `1-2,2-3` [default: all pairs].
    #[arg(long)]
    pub pairs: Option<String>,
    /// Average municipal yes shares instead of pooling votes for bloc support.
    #[arg(long)]
    pub mean_of_proportions: bool,
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Input column overrides, e.g. `yes=Yes,no=No`.
    #[arg(long)]
    pub columns: Option<String>,
    /// Blocs with fewer members are ignored when counting blocs.
    #[arg(long, default_value_t = 5)]
    pub min_bloc_size: usize,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub summary: SummaryArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Output directory of an earlier `infer` run.
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Destination [default: <samples>/analysis].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub columns: Option<String>,
    /// [default: the value recorded by `infer`]
    #[arg(long)]
    pub min_bloc_size: Option<usize>,
    /// [default: the seed recorded by `infer`]
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub summary: SummaryArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub q: usize,
    /// Voters per municipality.
    #[arg(long)]
    pub c: u32,
    /// Dirichlet concentration of the municipal mixtures.
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_shape: f64,
    #[arg(long, default_value_t = 20.0)]
    pub alpha_scale: f64,
}

#[derive(Debug, Clone, Args)]
pub struct RecoverArgs {
    /// CSV with columns k, n, q, c, delta and optional alpha_shape, alpha_scale, seed.
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub min_bloc_size: usize,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
}
