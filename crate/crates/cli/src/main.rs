//! `dswgan` command-line tool: synthetic data, cleaning and splitting,
//! DS-WGAN training and sampling, arrival epochs, queue runs and summary
//! statistics. Every output file gets a `<file>.meta.json` provenance
//! sidecar.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "dswgan", version, about = "Doubly stochastic arrival modeling with Wasserstein GANs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Global {
    /// Master seed; overrides the seed in --config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON config for the subcommand. Flags win over config values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Primary output path (a directory for `epochs`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate count data (and optionally arrival epochs) from a known model.
    Synth(SynthArgs),
    /// Drop days with any count outside per-interval percentile bands.
    Clean(CleanArgs),
    /// Random train/test split.
    Split(SplitArgs),
    /// Fit a DS-WGAN to count data.
    Train(TrainArgs),
    /// Draw days from a trained model.
    Sample(SampleArgs),
    /// Turn counts into arrival epochs.
    Epochs(EpochsArgs),
    /// Run arrival epochs through a queue.
    Queue(QueueArgs),
    /// Summary statistics of counts, or confidence bands of a model.
    Stats(StatsArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum ModelKind {
    Cir,
    Pgnorta,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum EpochModeArg {
    Pwc,
    Pwl,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum QueueModeArg {
    Infinite,
    Many,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum StaffingArg {
    Sqrt,
    Power,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub days: Option<usize>,
    /// Also write one epoch CSV per day (CIR only).
    #[arg(long)]
    pub epochs_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CleanArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub lower: Option<f64>,
    #[arg(long)]
    pub upper: Option<f64>,
    /// Where to list removed row indices (0-based).
    #[arg(long)]
    pub removed: Option<PathBuf>,
    #[arg(long = "T")]
    pub hours: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Train:test size ratio, e.g. 2:1.
    #[arg(long)]
    pub ratio: Option<String>,
    /// Test-set output; the training set goes to --out.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long = "T")]
    pub hours: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Training-log CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub n_critic: Option<usize>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub lr_start: Option<f64>,
    #[arg(long)]
    pub lr_end: Option<f64>,
    /// Hidden widths for both networks, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long = "T")]
    pub hours: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub days: Option<usize>,
    /// Multiplier applied to generated intensities.
    #[arg(long)]
    pub scale: Option<f64>,
}

#[derive(Args, Debug)]
pub struct EpochsArgs {
    #[arg(long, value_enum)]
    pub mode: Option<EpochModeArg>,
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long = "T")]
    pub hours: Option<f64>,
    /// Directory for per-day epoch files; defaults to --out.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct QueueArgs {
    /// Per-day epoch CSVs, or one subdirectory of them per macro-replication.
    #[arg(long)]
    pub epochs_dir: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<QueueModeArg>,
    #[arg(long)]
    pub service_mean: Option<f64>,
    #[arg(long)]
    pub service_var: Option<f64>,
    #[arg(long, value_enum)]
    pub staffing: Option<StaffingArg>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub macro_reps: Option<usize>,
    /// Occupancy checkpoint spacing in hours.
    #[arg(long)]
    pub checkpoint_step: Option<f64>,
    #[arg(long = "T")]
    pub hours: Option<f64>,
    /// Staffing intervals.
    #[arg(long)]
    pub intervals: Option<usize>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Count CSV to summarize.
    #[arg(long, required_unless_present = "model")]
    pub data: Option<PathBuf>,
    /// Trained model; emits confidence bands of generated statistics instead.
    #[arg(long, conflicts_with = "data")]
    pub model: Option<PathBuf>,
    /// Days per macro-replication (with --model).
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub macro_reps: Option<usize>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long = "T")]
    pub hours: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(g, a),
        Command::Clean(a) => commands::clean(g, a),
        Command::Split(a) => commands::split(g, a),
        Command::Train(a) => commands::train(g, a),
        Command::Sample(a) => commands::sample(g, a),
        Command::Epochs(a) => commands::epochs(g, a),
        Command::Queue(a) => commands::queue(g, a),
        Command::Stats(a) => commands::stats(g, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
