use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "turtle", version, about = "Unsupervised transfer over precomputed embedding spaces")]
pub struct Cli {
    /// More log output on stderr (repeat for more).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a multi-view blob dataset with ground-truth labels.
    Synth(SynthArgs),
    /// Train one task encoder.
    Train(TrainArgs),
    /// Train every point of the learning-rate grid.
    Grid(GridArgs),
    /// Pick a grid run by cross-validation on its own labels.
    Select(SelectArgs),
    /// Hungarian-matched accuracy of a labeling against ground truth.
    Eval(EvalArgs),
    /// K-means baseline on the concatenated normalized views.
    Kmeans(KmeansArgs),
    /// Supervised linear probe on one space.
    Probe(ProbeArgs),
    /// Check the margin lower bound over random encoder directions.
    BenchMargin(BenchMarginArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 600)]
    pub samples: usize,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    /// Dimension of each view; the view count is the list length.
    #[arg(long, value_delimiter = ',', default_value = "8,6")]
    pub dims: Vec<usize>,
    /// Distance between centroids in units of the blob standard deviation.
    #[arg(long, default_value_t = 10.0)]
    pub separation: f64,
    /// Class proportions (balanced if omitted).
    #[arg(long, value_delimiter = ',')]
    pub proportions: Option<Vec<f64>>,
    /// Share of samples marked `test` in split.txt.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Flat `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Embedding files, comma-separated (.csv or EMB1).
    #[arg(long, value_delimiter = ',')]
    pub spaces: Vec<PathBuf>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub inner_steps: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub outer_lr: Option<f64>,
    #[arg(long)]
    pub inner_lr: Option<f64>,
    #[arg(long, value_name = "BOOL")]
    pub warm_start: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "BOOL")]
    pub normalize: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Outer learning rates to search instead of the default five.
    #[arg(long, value_delimiter = ',')]
    pub outer_lrs: Option<Vec<f64>>,
    /// Inner learning rates to search instead of the default five.
    #[arg(long, value_delimiter = ',')]
    pub inner_lrs: Option<Vec<f64>>,
    /// Start modes to search (default both).
    #[arg(long, value_delimiter = ',', value_name = "BOOL")]
    pub warm_starts: Option<Vec<bool>>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub spaces: Vec<PathBuf>,
    /// Grid directory written by `grid`.
    #[arg(long)]
    pub grid: PathBuf,
    /// Defaults to the class count recorded in the runs.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to the setting recorded in the runs.
    #[arg(long, value_name = "BOOL")]
    pub normalize: Option<bool>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Defaults to the largest label seen plus one.
    #[arg(long)]
    pub classes: Option<usize>,
    /// Write the contingency matrix (rows: predicted, columns: true) here.
    #[arg(long)]
    pub contingency: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KmeansArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub spaces: Vec<PathBuf>,
    #[arg(long)]
    pub classes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Labels file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    /// Search 96 penalties instead of 13.
    #[arg(long)]
    pub full_grid: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "BOOL", default_value_t = false, action = ArgAction::Set)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct BenchMarginArgs {
    #[arg(long, default_value_t = 12)]
    pub points: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 20)]
    pub thetas: usize,
    #[arg(long, default_value_t = 100_000)]
    pub steps: usize,
    /// Defaults to 0.99 / points, just under the descent bound at 0.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
