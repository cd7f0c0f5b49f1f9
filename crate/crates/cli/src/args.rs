use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "part", version, about = "Aggregate subset posterior draws with random partition trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic experiment into a directory.
    Gen {
        #[command(subcommand)]
        which: GenCommand,
    },
    /// Run adaptive Metropolis on each subset of a logistic dataset.
    Chain(ChainArgs),
    /// Combine subset draw files into draws from the full posterior.
    Aggregate(AggregateArgs),
    /// Score approximate draws against reference draws.
    Eval(EvalArgs),
    /// Bin 1-D draws into a density table.
    Density(DensityArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Perturbed two-component normal mixtures.
    Bimodal {
        #[arg(long, default_value_t = 10)]
        m: usize,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rare Bernoulli successes with exact Beta subset posteriors.
    Bernoulli {
        #[arg(long, default_value_t = 10_000)]
        n_obs: usize,
        #[arg(long, default_value_t = 15)]
        m: usize,
        /// Success probability; defaults to 2m / n_obs.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlated-feature logistic regression data split into subsets.
    Logistic {
        #[arg(long, default_value_t = 5_000)]
        n_obs: usize,
        #[arg(long, default_value_t = 5)]
        p: usize,
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[arg(long, value_enum, default_value_t = Split::Random)]
        split: Split,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Random,
    LabelSorted,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Dataset written by `gen logistic`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub theta_star: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 10_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also sample the full-data posterior into full.csv.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    PartKd,
    PartMl,
    Average,
    Weighted,
    Parametric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmoothingArg {
    Gaussian,
    Uniform,
}

/// Unset options fall back to `--config`, then to built-in defaults.
#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub delta_rho: Option<f64>,
    #[arg(long)]
    pub delta_a: Option<f64>,
    /// Combine subsets two at a time instead of all at once.
    #[arg(long)]
    pub pairwise: bool,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub intermediate_draws: Option<usize>,
    #[arg(long, value_enum)]
    pub smoothing: Option<SmoothingArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Flat key=value file with any of the options above.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory holding subset_<i>.csv draw files.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub approx: PathBuf,
    #[arg(long)]
    pub theta_star: Option<PathBuf>,
    /// Label written in the method column.
    #[arg(long, default_value = "approx")]
    pub method: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// `LO:HI`; defaults to the draw range.
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}
