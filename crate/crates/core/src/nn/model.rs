//! The spectrogram CNN: conv blocks, a hidden fully connected layer and a
//! softmax output layer.
//!
//! Every conv block is `conv 3x3 (no bias) -> ReLU -> max-pool 2x2`. The head
//! either flattens the last feature map (`HeadMode::Dense`) or averages it
//! over space first (`HeadMode::GlobalAvgPool`), then applies
//! `FC (no bias) -> ReLU -> FC (bias) -> softmax`.
//!
//! Parameters are stored as a flat list in layer order: one kernel tensor per
//! conv block, the hidden weight `[D, H]`, the output weight `[H, C]` and the
//! output bias `[C]`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, global_avg_pool, global_avg_pool_backward,
    maxpool2d, maxpool2d_backward, relu, relu_backward, softmax_rows,
};
use super::loss::{loss_grad_probs, one_hot, sample_loss, softmax_backward, LossKind};
use super::optim::{AdamState, Optimizer};
use super::{NnError, Tensor};
use crate::exec::Execution;
use crate::spectro::SpectrogramImage;

/// Samples per parallel chunk when reducing per-sample conv gradients.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadMode {
    /// Flatten the last feature map into the hidden layer.
    Dense,
    /// Average the last feature map over space, then the hidden layer.
    GlobalAvgPool,
}

impl fmt::Display for HeadMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeadMode::Dense => "dense",
            HeadMode::GlobalAvgPool => "gap",
        })
    }
}

impl FromStr for HeadMode {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dense" | "flatten" => Ok(HeadMode::Dense),
            "gap" | "global-avg-pool" => Ok(HeadMode::GlobalAvgPool),
            _ => Err(NnError::Config(format!("unknown head mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnnSpec {
    pub input_side: usize,
    pub input_channels: usize,
    pub conv_channels: Vec<usize>,
    pub hidden_units: usize,
    pub n_classes: usize,
    pub head: HeadMode,
}

/// One row of a layer-by-layer shape listing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerTrace {
    pub kind: &'static str,
    pub input_shape: Vec<usize>,
    pub params: Option<usize>,
}

impl CnnSpec {
    /// Four conv blocks (64, 128, 256, 512), 4096 hidden units, 8 classes.
    pub fn reference(input_side: usize, head: HeadMode) -> CnnSpec {
        CnnSpec {
            input_side,
            input_channels: 1,
            conv_channels: vec![64, 128, 256, 512],
            hidden_units: 4096,
            n_classes: 8,
            head,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let blocks = self.conv_channels.len();
        if blocks == 0 || self.conv_channels.contains(&0) {
            return Err(NnError::Config("at least one conv block with nonzero channels".into()));
        }
        let div = 1usize << blocks;
        if self.input_side == 0 || !self.input_side.is_multiple_of(div) {
            return Err(NnError::Config(format!(
                "input side {} must be a positive multiple of {div}",
                self.input_side
            )));
        }
        if self.input_channels == 0 || self.hidden_units == 0 || self.n_classes < 2 {
            return Err(NnError::Config(
                "channels, hidden units and classes must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn final_side(&self) -> usize {
        self.input_side >> self.conv_channels.len()
    }

    pub fn last_channels(&self) -> usize {
        *self.conv_channels.last().expect("validated spec")
    }

    /// Length of the vector fed to the hidden layer.
    pub fn feature_len(&self) -> usize {
        match self.head {
            HeadMode::Dense => self.final_side().pow(2) * self.last_channels(),
            HeadMode::GlobalAvgPool => self.last_channels(),
        }
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        let mut cin = self.input_channels;
        for &cout in &self.conv_channels {
            shapes.push(vec![3, 3, cin, cout]);
            cin = cout;
        }
        shapes.push(vec![self.feature_len(), self.hidden_units]);
        shapes.push(vec![self.hidden_units, self.n_classes]);
        shapes.push(vec![self.n_classes]);
        shapes
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes().iter().map(|s| s.iter().product::<usize>()).sum()
    }

    /// Input shape and parameter count of every layer, pooling included.
    pub fn shape_trace(&self) -> Vec<LayerTrace> {
        let mut rows = Vec::new();
        let mut side = self.input_side;
        let mut cin = self.input_channels;
        for &cout in &self.conv_channels {
            rows.push(LayerTrace {
                kind: "Conv2-D",
                input_shape: vec![side, side, cin],
                params: Some(9 * cin * cout),
            });
            rows.push(LayerTrace {
                kind: "Pooling",
                input_shape: vec![side, side, cout],
                params: None,
            });
            side /= 2;
            cin = cout;
        }
        rows.push(LayerTrace {
            kind: "Fully Connected",
            input_shape: vec![side, side, cin],
            params: Some(self.feature_len() * self.hidden_units),
        });
        rows.push(LayerTrace {
            kind: "Output Layer",
            input_shape: vec![self.hidden_units],
            params: Some(self.hidden_units * self.n_classes + self.n_classes),
        });
        rows
    }
}

/// Converts an image into a `[H, W, 1]` tensor.
pub fn image_tensor(image: &SpectrogramImage) -> Tensor {
    Tensor::from_vec(&[image.height, image.width, 1], image.pixels.clone()).expect("image dimensions match pixel count")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    spec: CnnSpec,
    params: Vec<Tensor>,
}

/// Per-sample state kept by the conv stack for backpropagation.
#[derive(Debug, Clone)]
struct SampleTrace {
    conv_inputs: Vec<Tensor>,
    activations: Vec<Tensor>,
    argmax: Vec<Vec<usize>>,
    last_pool_shape: Vec<usize>,
}

/// Everything [`CnnModel::backward`] needs from a forward pass.
#[derive(Debug, Clone)]
pub struct BatchForward {
    traces: Vec<SampleTrace>,
    features: Tensor,
    hidden_act: Tensor,
    probs: Tensor,
}

impl BatchForward {
    /// `[B, C]` softmax outputs.
    pub fn probs(&self) -> &Tensor {
        &self.probs
    }

    /// `[B, D]` vectors fed to the hidden layer.
    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn batch_size(&self) -> usize {
        self.traces.len()
    }
}

impl CnnModel {
    /// He-uniform weights drawn from a ChaCha8 stream seeded with `seed`;
    /// the output bias starts at zero.
    pub fn init(spec: CnnSpec, seed: u64) -> Result<CnnModel, NnError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shapes = spec.param_shapes();
        let n = shapes.len();
        let params = shapes
            .iter()
            .enumerate()
            .map(|(i, shape)| {
                let mut t = Tensor::zeros(shape);
                if i + 1 < n {
                    let fan_in: usize = shape[..shape.len() - 1].iter().product();
                    let limit = (6.0 / fan_in as f64).sqrt();
                    t.data_mut().iter_mut().for_each(|v| *v = rng.gen_range(-limit..limit));
                }
                t
            })
            .collect();
        Ok(CnnModel { spec, params })
    }

    pub fn zeros(spec: CnnSpec) -> Result<CnnModel, NnError> {
        spec.validate()?;
        let params = spec.param_shapes().iter().map(|s| Tensor::zeros(s)).collect();
        Ok(CnnModel { spec, params })
    }

    pub fn from_params(spec: CnnSpec, params: Vec<Tensor>) -> Result<CnnModel, NnError> {
        spec.validate()?;
        let shapes = spec.param_shapes();
        if shapes.len() != params.len() || shapes.iter().zip(&params).any(|(s, p)| s.as_slice() != p.shape()) {
            return Err(NnError::ShapeMismatch("parameters do not match the spec".into()));
        }
        Ok(CnnModel { spec, params })
    }

    pub fn spec(&self) -> &CnnSpec {
        &self.spec
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    fn n_conv(&self) -> usize {
        self.spec.conv_channels.len()
    }

    fn check_image(&self, image: &Tensor) -> Result<(), NnError> {
        let s = self.spec.input_side;
        if image.shape() != [s, s, self.spec.input_channels] {
            return Err(NnError::ShapeMismatch(format!(
                "model expects [{s}, {s}, {}] input, got {:?}",
                self.spec.input_channels,
                image.shape()
            )));
        }
        Ok(())
    }

    /// Conv blocks for one sample; returns the head input and the trace.
    fn conv_stack_forward(&self, image: &Tensor) -> Result<(Vec<f64>, SampleTrace), NnError> {
        self.check_image(image)?;
        let n = self.n_conv();
        let mut conv_inputs = Vec::with_capacity(n);
        let mut activations = Vec::with_capacity(n);
        let mut argmax = Vec::with_capacity(n);
        let mut x = image.clone();
        for i in 0..n {
            let act = relu(&conv2d_forward(&x, &self.params[i])?);
            let (pooled, arg) = maxpool2d(&act)?;
            conv_inputs.push(x);
            activations.push(act);
            argmax.push(arg);
            x = pooled;
        }
        let last_pool_shape = x.shape().to_vec();
        let features = match self.spec.head {
            HeadMode::Dense => x.into_data(),
            HeadMode::GlobalAvgPool => global_avg_pool(&x)?.into_data(),
        };
        Ok((
            features,
            SampleTrace {
                conv_inputs,
                activations,
                argmax,
                last_pool_shape,
            },
        ))
    }

    /// Kernel gradients of one sample given the gradient of its head input.
    fn conv_stack_backward(&self, trace: &SampleTrace, d_features: &[f64]) -> Result<Vec<Tensor>, NnError> {
        let n = self.n_conv();
        let d_feat = Tensor::from_vec(&[d_features.len()], d_features.to_vec())?;
        let mut d = match self.spec.head {
            HeadMode::Dense => d_feat.reshape(&trace.last_pool_shape)?,
            HeadMode::GlobalAvgPool => global_avg_pool_backward(&trace.last_pool_shape, &d_feat)?,
        };
        let mut grads = vec![Tensor::zeros(&[0]); n];
        for i in (0..n).rev() {
            let act = &trace.activations[i];
            let d_act = maxpool2d_backward(act.shape(), &trace.argmax[i], &d)?;
            let d_pre = relu_backward(act, &d_act);
            let (d_in, d_k) = conv2d_backward(&trace.conv_inputs[i], &self.params[i], &d_pre)?;
            grads[i] = d_k;
            d = d_in;
        }
        Ok(grads)
    }

    fn forward_impl(&self, images: &[&Tensor], exec: Execution, keep: bool) -> Result<BatchForward, NnError> {
        if images.is_empty() {
            return Err(NnError::ShapeMismatch("empty batch".into()));
        }
        let n = self.n_conv();
        let per_sample = exec.try_map(images, |img| {
            self.conv_stack_forward(img).map(|(f, mut t)| {
                if !keep {
                    t.conv_inputs.clear();
                    t.activations.clear();
                    t.argmax.clear();
                }
                (f, t)
            })
        })?;
        let b = images.len();
        let d = self.spec.feature_len();
        let mut feats = Vec::with_capacity(b * d);
        let mut traces = Vec::with_capacity(b);
        for (f, t) in per_sample {
            feats.extend_from_slice(&f);
            traces.push(t);
        }
        let features = Tensor::from_vec(&[b, d], feats)?;
        let hidden_act = relu(&dense_forward(&features, &self.params[n], None)?);
        let logits = dense_forward(&hidden_act, &self.params[n + 1], Some(&self.params[n + 2]))?;
        let probs = softmax_rows(&logits)?;
        if !probs.all_finite() {
            return Err(NnError::NonFinite("softmax output".into()));
        }
        Ok(BatchForward {
            traces,
            features,
            hidden_act,
            probs,
        })
    }

    /// Forward pass over a batch, keeping what backpropagation needs.
    pub fn forward_batch(&self, images: &[&Tensor], exec: Execution) -> Result<BatchForward, NnError> {
        self.forward_impl(images, exec, true)
    }

    /// `[B, C]` class probabilities without keeping intermediate state.
    pub fn predict_batch(&self, images: &[&Tensor], exec: Execution) -> Result<Tensor, NnError> {
        Ok(self.forward_impl(images, exec, false)?.probs)
    }

    /// Class probabilities for a single `[side, side, 1]` image.
    pub fn forward(&self, image: &Tensor) -> Result<Tensor, NnError> {
        let probs = self.predict_batch(&[image], Execution::Sequential)?;
        probs.reshape(&[self.spec.n_classes])
    }

    /// Head input vector (flattened or averaged last feature map) for one image.
    pub fn features(&self, image: &Tensor) -> Result<Vec<f64>, NnError> {
        Ok(self.conv_stack_forward(image)?.0)
    }

    /// Mean loss of a forward pass against class indices.
    pub fn loss(&self, fwd: &BatchForward, targets: &[usize], kind: LossKind) -> Result<f64, NnError> {
        let c = self.spec.n_classes;
        check_targets(fwd, targets, c)?;
        let total: f64 = fwd
            .probs
            .data()
            .chunks_exact(c)
            .zip(targets)
            .map(|(p, &t)| sample_loss(kind, p, &one_hot(t, c)))
            .sum();
        Ok(total / targets.len() as f64)
    }

    /// Exact gradient of the mean batch loss with respect to every parameter.
    pub fn backward(
        &self,
        fwd: &BatchForward,
        targets: &[usize],
        kind: LossKind,
        exec: Execution,
    ) -> Result<Vec<Tensor>, NnError> {
        let c = self.spec.n_classes;
        check_targets(fwd, targets, c)?;
        if fwd.traces.iter().any(|t| t.activations.len() != self.n_conv()) {
            return Err(NnError::NotForwarded);
        }
        let b = targets.len();
        let inv_b = 1.0 / b as f64;
        let mut d_logits = Vec::with_capacity(b * c);
        for (p, &t) in fwd.probs.data().chunks_exact(c).zip(targets) {
            let g = loss_grad_probs(kind, p, &one_hot(t, c));
            d_logits.extend(softmax_backward(p, &g).into_iter().map(|v| v * inv_b));
        }
        let d_logits = Tensor::from_vec(&[b, c], d_logits)?;
        let n = self.n_conv();
        let (d_hidden_act, d_out_w, d_out_b) = dense_backward(&fwd.hidden_act, &self.params[n + 1], &d_logits)?;
        let d_hidden_pre = relu_backward(&fwd.hidden_act, &d_hidden_act);
        let (d_features, d_hidden_w, _) = dense_backward(&fwd.features, &self.params[n], &d_hidden_pre)?;

        let d = self.spec.feature_len();
        let mut conv_grads: Vec<Tensor> = self.params[..n].iter().map(|p| Tensor::zeros(p.shape())).collect();
        let indices: Vec<usize> = (0..b).collect();
        for chunk in indices.chunks(GRAD_CHUNK) {
            let partial = exec.try_map(chunk, |&s| {
                self.conv_stack_backward(&fwd.traces[s], &d_features.data()[s * d..(s + 1) * d])
            })?;
            for sample_grads in partial {
                for (acc, g) in conv_grads.iter_mut().zip(&sample_grads) {
                    acc.add_assign(g)?;
                }
            }
        }
        conv_grads.push(d_hidden_w);
        conv_grads.push(d_out_w);
        conv_grads.push(d_out_b);
        Ok(conv_grads)
    }
}

fn check_targets(fwd: &BatchForward, targets: &[usize], c: usize) -> Result<(), NnError> {
    if targets.len() != fwd.batch_size() {
        return Err(NnError::ShapeMismatch(format!(
            "{} targets for a batch of {}",
            targets.len(),
            fwd.batch_size()
        )));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= c) {
        return Err(NnError::ShapeMismatch(format!("target class {t} out of range")));
    }
    Ok(())
}

/// Model plus optimizer with the forward/backward/step protocol of training.
///
/// `backward` consumes the state stored by the latest `forward`; calling it
/// without one fails with [`NnError::NotForwarded`].
#[derive(Debug, Clone)]
pub struct Learner {
    pub model: CnnModel,
    pub optimizer: Optimizer,
    pub loss: LossKind,
    pub exec: Execution,
    pending: Option<BatchForward>,
}

impl Learner {
    pub fn adam(model: CnnModel, learning_rate: f64, loss: LossKind, exec: Execution) -> Learner {
        let state = AdamState::new(learning_rate, model.params());
        Learner {
            model,
            optimizer: Optimizer::Adam(state),
            loss,
            exec,
            pending: None,
        }
    }

    pub fn sgd(model: CnnModel, learning_rate: f64, loss: LossKind, exec: Execution) -> Learner {
        Learner {
            model,
            optimizer: Optimizer::Sgd { learning_rate },
            loss,
            exec,
            pending: None,
        }
    }

    pub fn forward(&mut self, images: &[&Tensor]) -> Result<&Tensor, NnError> {
        let fwd = self.model.forward_batch(images, self.exec)?;
        Ok(self.pending.insert(fwd).probs())
    }

    /// Returns `(mean loss, gradients)` for the pending forward pass.
    pub fn backward(&mut self, targets: &[usize]) -> Result<(f64, Vec<Tensor>), NnError> {
        let fwd = self.pending.take().ok_or(NnError::NotForwarded)?;
        let loss = self.model.loss(&fwd, targets, self.loss)?;
        let grads = self.model.backward(&fwd, targets, self.loss, self.exec)?;
        Ok((loss, grads))
    }

    pub fn apply(&mut self, grads: &[Tensor]) -> Result<(), NnError> {
        self.pending = None;
        self.optimizer.step(self.model.params_mut(), grads)?;
        if self.model.params().iter().any(|p| !p.all_finite()) {
            return Err(NnError::NonFinite("parameters after update".into()));
        }
        Ok(())
    }

    /// One forward, backward and update; returns the batch loss.
    pub fn train_batch(&mut self, images: &[&Tensor], targets: &[usize]) -> Result<f64, NnError> {
        self.forward(images)?;
        let (loss, grads) = self.backward(targets)?;
        self.apply(&grads)?;
        Ok(loss)
    }
}
