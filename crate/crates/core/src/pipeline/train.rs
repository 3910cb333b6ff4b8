//! Mini-batch training, evaluation and the cross-validated experiment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{OptimizerKind, RunConfig, TrainConfig};
use super::dataset::{augment_samples, Sample};
use super::metrics::{metrics_from_confusion, ConfusionMatrix, MetricsReport};
use super::split::{kfold, split_dataset};
use super::PipelineError;
use crate::exec::Execution;
use crate::nn::{image_tensor, AdamState, CnnModel, CnnSpec, NnError, Optimizer, Tensor};
use crate::wfdb::BeatClass;
use crate::Result;

/// Largest number of samples pushed through the network at once; bigger
/// batches accumulate gradients over several passes.
pub const MICRO_BATCH: usize = 32;

/// How the cross-validation folds feed the final test evaluation.
pub const MODEL_SELECTION_RULE: &str = "best-validation-accuracy-fold";

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    pub n_native: usize,
    pub n_augmented: usize,
}

fn tensors(samples: &[&Sample]) -> Vec<Tensor> {
    samples.iter().map(|s| image_tensor(&s.image)).collect()
}

/// Predicted class per sample: argmax of the softmax, lowest index on ties.
pub fn predict(model: &CnnModel, samples: &[&Sample], exec: Execution) -> Result<Vec<BeatClass>> {
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(MICRO_BATCH) {
        let imgs = tensors(chunk);
        let refs: Vec<&Tensor> = imgs.iter().collect();
        let probs = model.predict_batch(&refs, exec)?;
        for row in probs.data().chunks_exact(BeatClass::COUNT) {
            let best = row
                .iter()
                .enumerate()
                .fold(0, |b, (i, &v)| if v > row[b] { i } else { b });
            out.push(BeatClass::ALL[best]);
        }
    }
    Ok(out)
}

pub fn evaluate(model: &CnnModel, samples: &[&Sample], exec: Execution) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new();
    for (s, p) in samples.iter().zip(predict(model, samples, exec)?) {
        cm.record(s.label, p);
    }
    Ok(cm)
}

/// Trains a fresh model of shape `spec` on `fit`, scoring `val` after every
/// epoch. With augmentation on, crops of the selected classes are added to
/// the fit set only.
pub fn train_with_spec(
    spec: CnnSpec,
    cfg: &TrainConfig,
    fit: &[&Sample],
    val: &[&Sample],
    exec: Execution,
) -> Result<(CnnModel, TrainHistory)> {
    cfg.validate()?;
    if fit.is_empty() {
        return Err(PipelineError::EmptyDataset.into());
    }
    let augmented = if cfg.augment {
        augment_samples(fit, &cfg.augment_config, exec)?
    } else {
        Vec::new()
    };
    let all: Vec<&Sample> = fit.iter().copied().chain(augmented.iter()).collect();
    let inputs = tensors(&all);
    let labels: Vec<usize> = all.iter().map(|s| s.label.index()).collect();

    let mut model = CnnModel::init(spec, cfg.seed)?;
    let mut optimizer = match cfg.optimizer {
        OptimizerKind::Adam => Optimizer::Adam(AdamState::new(cfg.learning_rate, model.params())),
        OptimizerKind::Sgd => Optimizer::Sgd {
            learning_rate: cfg.learning_rate,
        },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..all.len()).collect();
    let mut history = TrainHistory {
        epochs: Vec::new(),
        n_native: fit.len(),
        n_augmented: augmented.len(),
    };

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut total: Option<Vec<Tensor>> = None;
            for micro in batch.chunks(MICRO_BATCH) {
                let imgs: Vec<&Tensor> = micro.iter().map(|&i| &inputs[i]).collect();
                let targets: Vec<usize> = micro.iter().map(|&i| labels[i]).collect();
                let fwd = model.forward_batch(&imgs, exec)?;
                loss_sum += model.loss(&fwd, &targets, cfg.loss)? * micro.len() as f64;
                let mut grads = model.backward(&fwd, &targets, cfg.loss, exec)?;
                if micro.len() != batch.len() {
                    let w = micro.len() as f64 / batch.len() as f64;
                    grads.iter_mut().for_each(|g| g.scale(w));
                }
                match total.as_mut() {
                    None => total = Some(grads),
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(&grads) {
                            a.add_assign(g)?;
                        }
                    }
                }
            }
            let grads = total.expect("non-empty batch");
            optimizer.step(model.params_mut(), &grads)?;
            if model.params().iter().any(|p| !p.all_finite()) {
                return Err(NnError::NonFinite(format!("parameters after epoch {epoch}")).into());
            }
        }
        let mean_loss = loss_sum / all.len() as f64;
        if !mean_loss.is_finite() {
            return Err(NnError::NonFinite(format!("loss in epoch {epoch}")).into());
        }
        let train_accuracy = if cfg.stop_at_full_train_accuracy {
            evaluate(&model, &all, exec)?.overall_accuracy()
        } else {
            None
        };
        let val_accuracy = if val.is_empty() {
            None
        } else {
            evaluate(&model, val, exec)?.overall_accuracy()
        };
        history.epochs.push(EpochStats {
            epoch,
            mean_loss,
            train_accuracy,
            val_accuracy,
        });
        if train_accuracy == Some(1.0) {
            break;
        }
    }
    Ok((model, history))
}

/// [`train_with_spec`] with the reference architecture at `image_side`.
pub fn train(
    cfg: &TrainConfig,
    image_side: usize,
    fit: &[&Sample],
    val: &[&Sample],
    exec: Execution,
) -> Result<(CnnModel, TrainHistory)> {
    train_with_spec(CnnSpec::reference(image_side, cfg.head), cfg, fit, val, exec)
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    pub history: TrainHistory,
    pub val_accuracy: f64,
    pub fit_ids: Vec<u64>,
    pub val_ids: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub folds: Vec<FoldResult>,
    pub best_fold: usize,
    pub model: CnnModel,
    pub train_ids: Vec<u64>,
    pub test_ids: Vec<u64>,
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
}

/// Ids of every sample a fold's model was trained on, crops included.
pub fn fit_ids(fit: &[&Sample], cfg: &TrainConfig, exec: Execution) -> Result<Vec<u64>> {
    let mut ids: Vec<u64> = fit.iter().map(|s| s.id).collect();
    if cfg.augment {
        ids.extend(augment_samples(fit, &cfg.augment_config, exec)?.iter().map(|s| s.id));
    }
    Ok(ids)
}

/// Stratified split, k-fold training on the train part, then the model of
/// the fold with the best validation accuracy (earliest on ties) is scored
/// on the held-out test part.
pub fn run_experiment_with_spec(
    spec: CnnSpec,
    cfg: &RunConfig,
    samples: &[Sample],
    exec: Execution,
) -> Result<ExperimentResult> {
    if samples.iter().any(Sample::is_augmented) {
        return Err(PipelineError::Config("experiment input must hold native samples only".into()).into());
    }
    let labels: Vec<BeatClass> = samples.iter().map(|s| s.label).collect();
    let (train_idx, test_idx) = split_dataset(&labels, &cfg.split)?;
    let train_labels: Vec<BeatClass> = train_idx.iter().map(|&i| labels[i]).collect();
    let folds = kfold(&train_labels, cfg.split.k_folds, cfg.split.seed)?;
    let n_train = cfg.folds_to_train.unwrap_or(folds.len()).clamp(1, folds.len());

    let pick = |idx: &[usize], base: &[usize]| -> Vec<&Sample> { idx.iter().map(|&i| &samples[base[i]]).collect() };
    let mut results = Vec::new();
    let mut best: Option<(f64, usize, CnnModel)> = None;
    for (f, (fit_i, val_i)) in folds.iter().take(n_train).enumerate() {
        let fit = pick(fit_i, &train_idx);
        let val = pick(val_i, &train_idx);
        let (model, history) = train_with_spec(spec.clone(), &cfg.train, &fit, &val, exec)?;
        let val_accuracy = history.epochs.last().and_then(|e| e.val_accuracy).unwrap_or(0.0);
        if best.as_ref().is_none_or(|(a, _, _)| val_accuracy > *a) {
            best = Some((val_accuracy, f, model));
        }
        results.push(FoldResult {
            fold: f,
            history,
            val_accuracy,
            fit_ids: fit_ids(&fit, &cfg.train, exec)?,
            val_ids: val.iter().map(|s| s.id).collect(),
        });
    }
    let (_, best_fold, model) = best.expect("at least one fold");
    let test: Vec<&Sample> = test_idx.iter().map(|&i| &samples[i]).collect();
    let confusion = evaluate(&model, &test, exec)?;
    let report = metrics_from_confusion(&confusion)?;
    Ok(ExperimentResult {
        folds: results,
        best_fold,
        model,
        train_ids: train_idx.iter().map(|&i| samples[i].id).collect(),
        test_ids: test.iter().map(|s| s.id).collect(),
        confusion,
        report,
    })
}

pub fn run_experiment(cfg: &RunConfig, samples: &[Sample], exec: Execution) -> Result<ExperimentResult> {
    let spec = CnnSpec::reference(cfg.spectrogram.image_side, cfg.train.head);
    run_experiment_with_spec(spec, cfg, samples, exec)
}

/// `(learning rate, batch size)` cells of the two published sweeps: five
/// batch sizes at 0.001, then three more rates at batch 2800.
pub fn sweep_grid() -> Vec<(f64, usize)> {
    let mut cells: Vec<(f64, usize)> = [2800, 2000, 1000, 500, 100].iter().map(|&b| (0.001, b)).collect();
    cells.extend([0.005, 0.1, 0.2].iter().map(|&lr| (lr, 2800)));
    cells
}
