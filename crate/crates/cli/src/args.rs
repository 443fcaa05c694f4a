use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "sigdim",
    version,
    about = "Single-snapshot signal-dimension estimation for uniform linear arrays",
    args_override_self = true,
    after_help = "Every subcommand accepts --config FILE: a text file of key=value lines whose keys are long \
                  flag names. Flags given on the command line override the file.\n\n\
                  Exit status: 0 success, 1 usage error, 2 runtime failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled SDIM training dataset.
    Datagen(DatagenArgs),
    /// Train the network on an SDIM dataset and write an SDMO checkpoint.
    Train(TrainArgs),
    /// Success rate against SNR.
    EvalSnr(EvalSnrArgs),
    /// Success rate against the separation of two equal-power sources.
    EvalResolution(EvalResolutionArgs),
    /// Estimate the number of sources in one snapshot with every estimator.
    Infer(InferArgs),
    /// Render a report CSV as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Case {
    /// DoAs in [-10, 10] degrees.
    #[value(name = "1")]
    One,
    /// DoAs in [-5, 5] degrees.
    #[value(name = "2")]
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Batch 64, 20 epochs, cosine learning-rate decay.
    Desk,
    /// Batch 1024, 10000 epochs, constant learning rate.
    Full,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// DoA interval: 1 = [-10, 10] deg, 2 = [-5, 5] deg.
    #[arg(long, value_enum, default_value = "1")]
    pub case: Case,
    /// Minimum pairwise DoA separation in degrees.
    #[arg(long, default_value_t = 0.1)]
    pub min_sep: f64,
    /// Smallest number of sources.
    #[arg(long, default_value_t = 1)]
    pub k_min: usize,
    /// Largest number of sources.
    #[arg(long, default_value_t = 4)]
    pub k_max: usize,
    /// Lower end of the per-source power range in dB.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub power_lo: f64,
    /// Upper end of the per-source power range in dB.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub power_hi: f64,
}

#[derive(Debug, Args)]
pub struct DatagenArgs {
    #[arg(long, value_name = "FILE", help = "Read default flag values from a key=value file")]
    pub config: Option<PathBuf>,
    /// Output SDIM file (written atomically).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Number of records.
    #[arg(long, default_value_t = 30_000)]
    pub count: u64,
    /// Noise level in dB.
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub snr: f64,
    /// Dataset seed. Record i uses the stream (seed, dataset, i).
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Array elements N.
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    /// Element spacing in wavelengths.
    #[arg(long, default_value_t = 0.5)]
    pub spacing: f64,
    /// Number of classes G (labels 0..G-1 stand for K = 1..G).
    #[arg(long, default_value_t = 4)]
    pub g: usize,
    /// Input scaling: normalized (unit RMS) or raw.
    #[arg(long, default_value = "normalized")]
    pub input_mode: String,
    /// Also write the raw snapshots as text, one `label,re0,im0,...` line per record.
    #[arg(long, value_name = "FILE")]
    pub raw_dump: Option<PathBuf>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE", help = "Read default flag values from a key=value file")]
    pub config: Option<PathBuf>,
    /// SDIM dataset to train on; the last 5% of records are held out.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Output SDMO checkpoint.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Training-log CSV (epoch,loss,train_acc,holdout_acc). Default: <out>.log.csv
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    /// Starting hyperparameters; the flags below override them.
    #[arg(long, value_enum, default_value = "desk")]
    pub preset: Preset,
    /// Passes over the training split.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam step size.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Adam first-moment decay.
    #[arg(long)]
    pub beta1: Option<f64>,
    /// Adam second-moment decay.
    #[arg(long)]
    pub beta2: Option<f64>,
    /// Adam epsilon.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Learning-rate schedule: constant or cosine.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Seed for initialisation and shuffling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed the dataset was generated with, recorded in the checkpoint.
    #[arg(long)]
    pub dataset_seed: Option<u64>,
    /// Input scaling the dataset was generated with.
    #[arg(long, default_value = "normalized")]
    pub input_mode: String,
    /// Do not print per-epoch progress.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated subset of aic,mdl,gic,dlsde.
    #[arg(long, default_value = "aic,mdl,gic")]
    pub estimators: String,
    /// SDMO checkpoint, required when dlsde is selected.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Monte Carlo trials per axis point.
    #[arg(long, default_value_t = 20_000)]
    pub trials: usize,
    /// Use 2000 trials per point (overrides --trials).
    #[arg(long)]
    pub fast: bool,
    /// Spatial smoothing length M.
    #[arg(long, default_value_t = 17)]
    pub m: usize,
    /// Array elements N.
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    /// Evaluation seed. Trial t of point p uses the stream (seed, evaluation, p, t).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, env = "SIGDIM_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Report CSV (estimator,axis,axis_value,successes,trials,rate,ci_lo,ci_hi).
    /// A JSON sidecar with the full configuration is written next to it.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also render the report as SVG.
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalSnrArgs {
    #[arg(long, value_name = "FILE", help = "Read default flag values from a key=value file")]
    pub config: Option<PathBuf>,
    /// SNR points in dB: lo:hi:step, a comma list, or one value.
    #[arg(long, default_value = "-5:30:5", allow_hyphen_values = true)]
    pub snr: String,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Args)]
pub struct EvalResolutionArgs {
    #[arg(long, value_name = "FILE", help = "Read default flag values from a key=value file")]
    pub config: Option<PathBuf>,
    /// Separations in degrees: lo:hi:step, a comma list, or one value.
    #[arg(long, default_value = "0.2:3:0.2")]
    pub sep: String,
    /// Fixed SNR in dB.
    #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
    pub snr: f64,
    /// DoA interval: 1 = [-10, 10] deg, 2 = [-5, 5] deg.
    #[arg(long, value_enum, default_value = "1")]
    pub case: Case,
    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long, value_name = "FILE", help = "Read default flag values from a key=value file")]
    pub config: Option<PathBuf>,
    /// Snapshot: N lines of `re,im`, or the binary SDSN form.
    #[arg(long, value_name = "FILE")]
    pub snapshot: PathBuf,
    /// SDMO checkpoint; without it the network is skipped.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Expected number of samples (taken from the checkpoint when given).
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    /// Spatial smoothing length M.
    #[arg(long, default_value_t = 17)]
    pub m: usize,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, value_name = "FILE", help = "Read default flag values from a key=value file")]
    pub config: Option<PathBuf>,
    /// Report CSV to plot.
    #[arg(long, value_name = "FILE")]
    pub report: PathBuf,
    /// Output SVG.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Chart title.
    #[arg(long, default_value = "Successful detection rate")]
    pub title: String,
}
