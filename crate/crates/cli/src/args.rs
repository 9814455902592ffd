use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "riskroute", version, about = "Risk-aware field-service routing pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed; every stage derives its own stream from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// JSON config file, or a manifest written by an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic activity corpus.
    Gen(GenArgs),
    /// Train a duration model and calibrate its residual tables.
    Train(TrainArgs),
    /// Recompute variance and conformal tables for a model on a corpus.
    Calibrate(CalibrateArgs),
    /// Solve one day and write its Pareto set.
    Solve(SolveArgs),
    /// Execute the recommended plan of a solve run with realized durations.
    Replay(ReplayArgs),
    /// Compare duration strategies over a month of days.
    Compare(CompareArgs),
    /// Render CSV reports from a train or compare output directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of consecutive days to generate.
    #[arg(long)]
    pub days: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus CSV written by `gen`.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Model architecture.
    #[arg(long, value_parser = ["standard", "weighted", "dual", "dual_weighted"])]
    pub variant: Option<String>,
    /// Hyperparameter grid: `default` or a JSON file with n_trees, max_depth, learning_rate lists.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Model JSON written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Corpus whose residuals calibrate the tables.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Risk level for the printed buffers.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    SubGaussian,
    Conformal,
    None,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Route risk level (overrides each vehicle's own level).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    /// Wall-clock budget per solve, seconds.
    #[arg(long)]
    pub time_budget: Option<f64>,
    /// Risk buffer rule.
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    /// Conformal table JSON (needed by `--rule conformal` without a training run).
    #[arg(long)]
    pub conformal: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance JSON.
    #[arg(long, conflicts_with_all = ["corpus", "day"])]
    pub instance: Option<PathBuf>,
    /// Corpus CSV; one day of it becomes the instance.
    #[arg(long, requires = "day")]
    pub corpus: Option<PathBuf>,
    /// Day to plan from the corpus (YYYY-MM-DD).
    #[arg(long)]
    pub day: Option<String>,
    /// Planning durations: real, default or forecast.
    #[arg(long, default_value = "default")]
    pub strategy: String,
    /// Model JSON (forecast strategy).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Output directory of a `solve` run.
    #[arg(long)]
    pub solution: PathBuf,
    /// Replay this plan file instead of the recommended one.
    #[arg(long)]
    pub plan: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated strategies.
    #[arg(long)]
    pub strategies: Option<String>,
    /// Days to plan: `synthetic-month` or a corpus CSV path.
    #[arg(long, default_value = "synthetic-month")]
    pub month: String,
    /// Length of the synthetic month.
    #[arg(long)]
    pub days: Option<usize>,
    /// Model JSON; without it a model is trained on a synthetic history.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directory of a `train` or `compare` run.
    #[arg(long)]
    pub input: PathBuf,
}
