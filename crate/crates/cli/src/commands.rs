use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ecg2d::augment::{crop_augment, crop_plan};
use ecg2d::beatset::{segment_beats, write_cache, BeatSegment};
use ecg2d::denoise::denoise as denoise_signal;
use ecg2d::nn::{load_checkpoint, save_checkpoint, CnnModel};
use ecg2d::pipeline::dataset::{dataset_hash, load_dataset, record_beats, samples_from_beats};
use ecg2d::pipeline::manifest::git_revision;
use ecg2d::pipeline::train::{predict as predict_classes, MODEL_SELECTION_RULE};
use ecg2d::pipeline::{
    evaluate, metrics_from_confusion, run_experiment, split_dataset, sweep_grid, ConfusionMatrix, ExperimentResult,
    Manifest, RunConfig, Sample,
};
use ecg2d::spectro::spectrogram as render;
use ecg2d::wfdb::{class_counts, read_annotations, read_record, BeatClass};
use ecg2d::Execution;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(ecg2d::Error),
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn name(&self) -> String {
        match self {
            CliError::Usage(_) => "cli::Usage".into(),
            CliError::Data(e) => e.name(),
            CliError::Io { .. } => "cli::Io".into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Data(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl<E: Into<ecg2d::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Data(e.into())
    }
}

pub struct Context {
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub config_file: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Context {
    fn data_dir(&self) -> Result<&Path, CliError> {
        self.data_dir
            .as_deref()
            .ok_or_else(|| CliError::Usage("no data directory: pass --data-dir or set ECG2D_DATA_DIR".into()))
    }

    fn config(&self, overrides: &[(String, String)]) -> Result<RunConfig, CliError> {
        Ok(RunConfig::layered(self.config_file.as_deref(), overrides)?)
    }

    fn out(&self, name: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out_dir).map_err(|source| CliError::Io {
            path: self.out_dir.clone(),
            source,
        })?;
        Ok(self.out_dir.join(name))
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.out(name)?;
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    fn manifest(&self, command: &str, cfg: &RunConfig) -> Manifest {
        let mut m = Manifest::new(command);
        m.set("run.version", env!("CARGO_PKG_VERSION"));
        m.set("run.git_revision", git_revision(Path::new(env!("CARGO_MANIFEST_DIR"))));
        m.set(
            "run.data_dir",
            self.data_dir
                .as_deref()
                .map_or("none".into(), |p| p.display().to_string()),
        );
        m.set("run.threads", self.threads.map_or("default".into(), |t| t.to_string()));
        m.set_config(cfg);
        m
    }

    fn finish(&self, command: &str, m: &Manifest) -> Result<(), CliError> {
        let path = self.out(&format!("{command}.manifest"))?;
        m.write(&path)?;
        println!("manifest={}", path.display());
        Ok(())
    }
}

fn exec() -> Execution {
    Execution::Parallel
}

fn counts_line(counts: &[usize; BeatClass::COUNT]) -> String {
    BeatClass::ALL
        .iter()
        .map(|c| format!("{}={}", c.acronym(), counts[c.index()]))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn ingest(ctx: &Context, record: &str, overrides: &[(String, String)]) -> Result<(), CliError> {
    let cfg = ctx.config(overrides)?;
    let dir = ctx.data_dir()?;
    let rec = read_record(dir, record)?;
    let ann = read_annotations(dir, record, "atr")?;
    let counts = class_counts(&ann);
    println!("record={record}");
    println!("n_samples={}", rec.header.n_samples);
    println!("sampling_rate={}", rec.header.sampling_rate);
    println!("checksums=verified");
    println!("annotations={}", ann.len());
    println!("{}", counts_line(&counts));
    let mut m = ctx.manifest("ingest", &cfg);
    m.set("run.record", record);
    m.set("run.n_samples", rec.header.n_samples);
    m.set("run.annotations", ann.len());
    m.set("run.class_counts", counts_line(&counts));
    ctx.finish("ingest", &m)
}

fn denoised_channel(ctx: &Context, record: &str, cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let rec = read_record(ctx.data_dir()?, record)?;
    if cfg.channel >= rec.signals.len() {
        return Err(CliError::Usage(format!("channel {} out of range", cfg.channel)));
    }
    Ok(denoise_signal(&rec.physical(cfg.channel), &cfg.denoise)?)
}

pub fn denoise(ctx: &Context, record: &str, overrides: &[(String, String)]) -> Result<(), CliError> {
    let cfg = ctx.config(overrides)?;
    let clean = denoised_channel(ctx, record, &cfg)?;
    let path = ctx.out(&format!("{record}_ch{}.denoised.f64", cfg.channel))?;
    let bytes: Vec<u8> = clean.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&path, bytes).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    println!("samples={}", clean.len());
    println!("output={}", path.display());
    let mut m = ctx.manifest("denoise", &cfg);
    m.set("run.record", record);
    ctx.finish("denoise", &m)
}

fn beats(ctx: &Context, record: &str, cfg: &RunConfig) -> Result<Vec<BeatSegment>, CliError> {
    let clean = denoised_channel(ctx, record, cfg)?;
    let ann = read_annotations(ctx.data_dir()?, record, "atr")?;
    Ok(segment_beats(&clean, &ann, cfg.window, record)?)
}

pub fn segment(ctx: &Context, record: &str, overrides: &[(String, String)]) -> Result<(), CliError> {
    let cfg = ctx.config(overrides)?;
    let segs = beats(ctx, record, &cfg)?;
    let stem = ctx.out(record)?;
    write_cache(&stem, &segs)?;
    let mut counts = [0usize; BeatClass::COUNT];
    segs.iter().for_each(|s| counts[s.label.index()] += 1);
    println!("beats={}", segs.len());
    println!("{}", counts_line(&counts));
    println!("cache={}", stem.with_extension("idx").display());
    let mut m = ctx.manifest("segment", &cfg);
    m.set("run.record", record);
    m.set("run.beats", segs.len());
    ctx.finish("segment", &m)
}

fn one_beat(ctx: &Context, record: &str, index: usize, cfg: &RunConfig) -> Result<BeatSegment, CliError> {
    let mut segs = beats(ctx, record, cfg)?;
    if index >= segs.len() {
        return Err(CliError::Usage(format!(
            "beat index {index} out of range ({} labelled beats)",
            segs.len()
        )));
    }
    Ok(segs.swap_remove(index))
}

pub fn spectrogram(ctx: &Context, record: &str, index: usize, overrides: &[(String, String)]) -> Result<(), CliError> {
    let cfg = ctx.config(overrides)?;
    let beat = one_beat(ctx, record, index, &cfg)?;
    let img = render(&beat.samples, &cfg.spectrogram)?;
    let path = ctx.out(&format!("{record}_{index}_{}.png", beat.label))?;
    img.write_png(&path)?;
    println!("label={}", beat.label);
    println!("output={}", path.display());
    let mut m = ctx.manifest("spectrogram", &cfg);
    m.set("run.record", record);
    m.set("run.index", index);
    ctx.finish("spectrogram", &m)
}

pub fn augment_preview(
    ctx: &Context,
    record: &str,
    index: usize,
    overrides: &[(String, String)],
) -> Result<(), CliError> {
    let cfg = ctx.config(overrides)?;
    let beat = one_beat(ctx, record, index, &cfg)?;
    let img = render(&beat.samples, &cfg.spectrogram)?;
    let aug = &cfg.train.augment_config;
    let (_, plan) = crop_plan(img.height, aug.crop_ratio, aug.include_center)?;
    let crops = crop_augment(&img, aug.crop_ratio, aug.include_center)?;
    for ((pos, _), crop) in plan.iter().zip(&crops) {
        let path = ctx.out(&format!("{record}_{index}_{pos:?}.png"))?;
        crop.write_png(&path)?;
        println!("output={}", path.display());
    }
    let mut m = ctx.manifest("augment-preview", &cfg);
    m.set("run.record", record);
    m.set("run.index", index);
    m.set("run.variants", crops.len());
    ctx.finish("augment-preview", &m)
}

fn dataset(ctx: &Context, cfg: &RunConfig) -> Result<Vec<Sample>, CliError> {
    if cfg.records.is_empty() {
        return Err(CliError::Usage("no records selected: pass --records".into()));
    }
    Ok(load_dataset(ctx.data_dir()?, cfg, exec())?)
}

fn write_scores(ctx: &Context, prefix: &str, cm: &ConfusionMatrix) -> Result<(), CliError> {
    ctx.write(&format!("{prefix}confusion.csv"), &cm.to_delimited())?;
    if cm.total() == 0 {
        println!("no samples evaluated");
        return Ok(());
    }
    let report = metrics_from_confusion(cm)?;
    ctx.write(&format!("{prefix}metrics.txt"), &report.to_table())?;
    ctx.write(&format!("{prefix}metrics.csv"), &report.to_delimited())?;
    print!("{}", report.to_table());
    Ok(())
}

fn history_csv(result: &ExperimentResult) -> String {
    let mut s = String::from("fold,epoch,mean_loss,val_accuracy\n");
    for f in &result.folds {
        for e in &f.history.epochs {
            let val = e.val_accuracy.map_or(String::new(), |v| v.to_string());
            s.push_str(&format!("{},{},{},{}\n", f.fold, e.epoch, e.mean_loss, val));
        }
    }
    s
}

pub fn train(ctx: &Context, overrides: &[(String, String)]) -> Result<(), CliError> {
    let cfg = ctx.config(overrides)?;
    let samples = dataset(ctx, &cfg)?;
    let hash = dataset_hash(&samples);
    let result = run_experiment(&cfg, &samples, exec())?;
    let ckpt = ctx.out("model.ckpt")?;
    save_checkpoint(&result.model, &ckpt)?;
    ctx.write("history.csv", &history_csv(&result))?;
    write_scores(ctx, "", &result.confusion)?;
    println!("checkpoint={}", ckpt.display());
    let mut m = ctx.manifest("train", &cfg);
    m.set("run.dataset_sha256", hash);
    m.set("run.samples", samples.len());
    m.set("run.model_selection", MODEL_SELECTION_RULE);
    m.set("run.best_fold", result.best_fold);
    m.set("run.test_samples", result.test_ids.len());
    ctx.finish("train", &m)
}

/// Config for scoring a checkpoint; the image size follows the checkpoint
/// unless set explicitly.
fn config_for(ctx: &Context, model: &CnnModel, overrides: &[(String, String)]) -> Result<RunConfig, CliError> {
    let mut cfg = ctx.config(&[])?;
    cfg.set("image_size", &model.spec().input_side.to_string())?;
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

pub fn eval(ctx: &Context, checkpoint: &Path, test_only: bool, overrides: &[(String, String)]) -> Result<(), CliError> {
    let model = load_checkpoint(checkpoint)?;
    let cfg = config_for(ctx, &model, overrides)?;
    let samples = dataset(ctx, &cfg)?;
    let chosen: Vec<&Sample> = if test_only {
        let labels: Vec<BeatClass> = samples.iter().map(|s| s.label).collect();
        let (_, test) = split_dataset(&labels, &cfg.split)?;
        test.iter().map(|&i| &samples[i]).collect()
    } else {
        samples.iter().collect()
    };
    let cm = evaluate(&model, &chosen, exec())?;
    write_scores(ctx, "eval_", &cm)?;
    let mut m = ctx.manifest("eval", &cfg);
    m.set("run.checkpoint", checkpoint.display());
    m.set("run.split", if test_only { "test" } else { "all" });
    m.set("run.dataset_sha256", dataset_hash(&samples));
    m.set("run.evaluated", chosen.len());
    ctx.finish("eval", &m)
}

pub fn predict(ctx: &Context, checkpoint: &Path, record: &str, overrides: &[(String, String)]) -> Result<(), CliError> {
    let model = load_checkpoint(checkpoint)?;
    let cfg = config_for(ctx, &model, overrides)?;
    let segs = record_beats(ctx.data_dir()?, record, &cfg)?;
    let samples = samples_from_beats(&segs, &cfg.spectrogram, exec())?;
    let refs: Vec<&Sample> = samples.iter().collect();
    let predicted = predict_classes(&model, &refs, exec())?;
    let path = ctx.out(&format!("{record}_predictions.csv"))?;
    let mut out = String::from("record,center,annotated,predicted\n");
    for (s, p) in samples.iter().zip(&predicted) {
        out.push_str(&format!("{},{},{},{}\n", s.record, s.center_index, s.label, p));
    }
    fs::write(&path, out).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let agree = samples.iter().zip(&predicted).filter(|(s, p)| s.label == **p).count();
    println!("beats={}", samples.len());
    println!("agreement={agree}");
    println!("output={}", path.display());
    let mut m = ctx.manifest("predict", &cfg);
    m.set("run.checkpoint", checkpoint.display());
    m.set("run.record", record);
    ctx.finish("predict", &m)
}

pub fn sweep(ctx: &Context, overrides: &[(String, String)]) -> Result<(), CliError> {
    let base = ctx.config(overrides)?;
    let samples = dataset(ctx, &base)?;
    let path = ctx.out("sweep.csv")?;
    let mut file = fs::File::create(&path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let header = "learning_rate,batch_size,accuracy,precision,sensitivity,specificity,f1";
    let io = |source| CliError::Io {
        path: path.clone(),
        source,
    };
    writeln!(file, "{header}").map_err(io)?;
    println!("{header}");
    for (lr, batch) in sweep_grid() {
        let mut cfg = base.clone();
        cfg.train.learning_rate = lr;
        cfg.train.batch_size = batch;
        let r = run_experiment(&cfg, &samples, exec())?.report;
        let row = format!(
            "{lr},{batch},{},{},{},{},{}",
            r.accuracy, r.precision, r.sensitivity, r.specificity, r.f1
        );
        writeln!(file, "{row}").map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        println!("{row}");
    }
    let mut m = ctx.manifest("sweep", &base);
    m.set("run.dataset_sha256", dataset_hash(&samples));
    m.set(
        "run.grid",
        "lr=0.001 x batch{2800,2000,1000,500,100}; batch=2800 x lr{0.005,0.1,0.2}",
    );
    m.set("run.model_selection", MODEL_SELECTION_RULE);
    ctx.finish("sweep", &m)
}
