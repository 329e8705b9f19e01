use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "npvo",
    version,
    about = "Predict, avoid and verify around moving obstacles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its trace, metrics and manifest.
    Simulate(SimulateArgs),
    /// Build the confidence-threshold table by sequential testing.
    Verify(VerifyArgs),
    /// Evaluate collision bounds, optionally against simulated rates.
    Bounds(BoundsArgs),
    /// One-shot prediction from a CSV of observed deltas.
    Predict(PredictArgs),
    /// List the bundled scenarios.
    Scenarios,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output directory; defaults to a run-specific directory under
    /// $NPVO_OUT_DIR (or ./npvo-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace an existing output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with_all = ["scenario", "manifest"])]
    pub config: Option<PathBuf>,
    /// Bundled scenario name.
    #[arg(long, conflicts_with = "manifest")]
    pub scenario: Option<String>,
    /// Replay the run recorded by a manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub predictor: Option<PredictorArg>,
    /// Exit with code 4 if the solver ever reports no feasible velocity.
    #[arg(long)]
    pub strict: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Verification file (TOML); the bundled default grid when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub predictor: Option<VerifyPredictorArg>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Add simulated collision rates next to each bound.
    #[arg(long)]
    pub validate: bool,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest entity count in the full table.
    #[arg(long, default_value_t = 6)]
    pub max_n: usize,
    /// Write the table here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// CSV of observed deltas, one `dx,dy` per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Sampling interval of the deltas (s).
    #[arg(long, default_value_t = 0.5)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, value_enum, default_value_t = PredictorArg::Lstm)]
    pub predictor: PredictorArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the prediction here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictorArg {
    Lstm,
    Rnn,
    #[value(alias = "constant-velocity")]
    Const,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyPredictorArg {
    Lstm,
    Rnn,
    #[value(alias = "constant-velocity")]
    Const,
    WholePlane,
    GridOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Single,
    Dual,
    Multi,
    Reciprocal,
}
