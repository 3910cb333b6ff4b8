//! `ecg2d`: command-line front end for the ECG spectrogram classifier.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "ecg2d",
    version,
    about = "ECG arrhythmia classification from STFT spectrograms"
)]
struct Cli {
    /// Directory holding MIT-BIH `.hea`, `.dat` and `.atr` files.
    #[arg(long, global = true, env = "ECG2D_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// Directory receiving every file the command writes.
    #[arg(long, global = true, default_value = "ecg2d-out")]
    out_dir: PathBuf,
    /// Worker threads for data-parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// `key = value` configuration file, applied before command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a record and its annotations, verify checksums, count beats.
    Ingest(RecordArgs),
    /// Denoise one channel of a record and write it as raw f64.
    Denoise(RecordArgs),
    /// Cut labelled beat windows from a record into a beat cache.
    Segment(RecordArgs),
    /// Render the spectrogram of one beat as PNG.
    Spectrogram(BeatArgs),
    /// Render the crop variants of one beat's spectrogram as PNGs.
    AugmentPreview(BeatArgs),
    /// Split, cross-validate, train and score on the selected records.
    Train(TrainArgs),
    /// Score a checkpoint on the selected records.
    Eval(EvalArgs),
    /// Classify every beat of a record with a checkpoint.
    Predict(PredictArgs),
    /// Run the learning-rate / batch-size grid, one metrics row per cell.
    Sweep(SweepArgs),
}

/// Flags that map onto configuration keys; unset flags leave the value
/// from the config file or the default.
#[derive(Args, Debug, Default)]
struct ConfigFlags {
    /// Comma-separated record names.
    #[arg(long)]
    records: Option<String>,
    /// Seed for splits, shuffling and initialization.
    #[arg(long)]
    seed: Option<u64>,
    /// Training epochs per fold.
    #[arg(long)]
    epochs: Option<usize>,
    /// Samples per optimizer step.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Optimizer step size.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Side of the square spectrogram image (a multiple of 16).
    #[arg(long)]
    image_size: Option<usize>,
    /// Crop augmentation of the fit split.
    #[arg(long)]
    augment: Option<bool>,
    /// `dense` or `gap`.
    #[arg(long)]
    head: Option<String>,
    /// `eq3` or `categorical`.
    #[arg(long)]
    loss: Option<String>,
    /// `adam` or `sgd`.
    #[arg(long)]
    optimizer: Option<String>,
    /// Keep at most this many beats per class (seeded draw).
    #[arg(long)]
    max_per_class: Option<usize>,
    /// Drop classes with fewer beats than this.
    #[arg(long)]
    min_class_size: Option<usize>,
    /// Cross-validation folds over the train split.
    #[arg(long)]
    k_folds: Option<usize>,
    /// Train only the first N folds.
    #[arg(long)]
    folds_to_train: Option<usize>,
    /// Signal channel to use (0 is MLII on most records).
    #[arg(long)]
    channel: Option<usize>,
    /// Any configuration key, as KEY=VALUE; may repeat.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigFlags {
    fn overrides(&self) -> Result<Vec<(String, String)>, CliError> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("records", self.records.clone());
        push("seed", self.seed.map(|v| v.to_string()));
        push("epochs", self.epochs.map(|v| v.to_string()));
        push("batch_size", self.batch_size.map(|v| v.to_string()));
        push("learning_rate", self.learning_rate.map(|v| v.to_string()));
        push("image_size", self.image_size.map(|v| v.to_string()));
        push("augment", self.augment.map(|v| v.to_string()));
        push("head", self.head.clone());
        push("loss", self.loss.clone());
        push("optimizer", self.optimizer.clone());
        push("max_per_class", self.max_per_class.map(|v| v.to_string()));
        push("min_class_size", self.min_class_size.map(|v| v.to_string()));
        push("k_folds", self.k_folds.map(|v| v.to_string()));
        push("folds_to_train", self.folds_to_train.map(|v| v.to_string()));
        push("channel", self.channel.map(|v| v.to_string()));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }
}

#[derive(Args, Debug)]
struct RecordArgs {
    /// Record name, e.g. 100.
    #[arg(long)]
    record: String,
    #[command(flatten)]
    cfg: ConfigFlags,
}

#[derive(Args, Debug)]
struct BeatArgs {
    #[arg(long)]
    record: String,
    /// Position of the beat among the record's labelled beats.
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[command(flatten)]
    cfg: ConfigFlags,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    cfg: ConfigFlags,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Score the held-out test split (`test`) or every beat (`all`).
    #[arg(long, default_value = "test", value_parser = ["test", "all"])]
    split: String,
    #[command(flatten)]
    cfg: ConfigFlags,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    record: String,
    #[command(flatten)]
    cfg: ConfigFlags,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    cfg: ConfigFlags,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.name(), e);
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        set_threads(n)?;
    }
    let ctx = commands::Context {
        data_dir: cli.data_dir,
        out_dir: cli.out_dir,
        config_file: cli.config,
        threads: cli.threads,
    };
    match cli.command {
        Command::Ingest(a) => commands::ingest(&ctx, &a.record, &a.cfg.overrides()?),
        Command::Denoise(a) => commands::denoise(&ctx, &a.record, &a.cfg.overrides()?),
        Command::Segment(a) => commands::segment(&ctx, &a.record, &a.cfg.overrides()?),
        Command::Spectrogram(a) => commands::spectrogram(&ctx, &a.record, a.index, &a.cfg.overrides()?),
        Command::AugmentPreview(a) => commands::augment_preview(&ctx, &a.record, a.index, &a.cfg.overrides()?),
        Command::Train(a) => commands::train(&ctx, &a.cfg.overrides()?),
        Command::Eval(a) => commands::eval(&ctx, &a.checkpoint, a.split == "test", &a.cfg.overrides()?),
        Command::Predict(a) => commands::predict(&ctx, &a.checkpoint, &a.record, &a.cfg.overrides()?),
        Command::Sweep(a) => commands::sweep(&ctx, &a.cfg.overrides()?),
    }
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

#[cfg(not(feature = "parallel"))]
fn set_threads(n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    Ok(())
}
