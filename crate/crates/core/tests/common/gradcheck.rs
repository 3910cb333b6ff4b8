//! Analytic gradients against central finite differences.

use ecg2d::nn::layers::*;
use ecg2d::nn::loss::{loss_grad_probs, one_hot, sample_loss, softmax_backward};
use ecg2d::nn::{CnnModel, HeadMode, LossKind, Tensor};
use ecg2d::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;
pub const TOL: f64 = 1e-6;

pub fn random(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// `||analytic - numeric|| / max(||analytic||, ||numeric||)`.
pub fn rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.iter().zip(numeric).map(|(a, n)| a - n));
    let scale = norm(&mut analytic.iter().copied()).max(norm(&mut numeric.iter().copied()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Central differences of `f` at every coordinate of `x`.
pub fn numeric_grad(x: &Tensor, f: &dyn Fn(&Tensor) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.clone();
            p.data_mut()[i] += STEP;
            let mut m = x.clone();
            m.data_mut()[i] -= STEP;
            (f(&p) - f(&m)) / (2.0 * STEP)
        })
        .collect()
}

fn err(name: &str, analytic: &Tensor, numeric: &[f64]) -> (String, f64) {
    (name.to_string(), rel_error(analytic.data(), numeric))
}

pub fn conv2d() -> Vec<(String, f64)> {
    let x = random(&[6, 5, 3], 1);
    let k = random(&[3, 3, 3, 4], 2);
    let r = random(&[6, 5, 4], 3);
    let (dx, dk) = conv2d_backward(&x, &k, &r).unwrap();
    vec![
        err(
            "conv input",
            &dx,
            &numeric_grad(&x, &|x| dot(&conv2d_forward(x, &k).unwrap(), &r)),
        ),
        err(
            "conv kernels",
            &dk,
            &numeric_grad(&k, &|k| dot(&conv2d_forward(&x, k).unwrap(), &r)),
        ),
    ]
}

pub fn relu_layer() -> Vec<(String, f64)> {
    let mut x = random(&[4, 4, 3], 4);
    // keep every input well away from the kink
    x.data_mut().iter_mut().for_each(|v| {
        if v.abs() < 1e-3 {
            *v = 0.5
        }
    });
    let r = random(&[4, 4, 3], 5);
    let dx = relu_backward(&relu(&x), &r);
    vec![err("relu", &dx, &numeric_grad(&x, &|x| dot(&relu(x), &r)))]
}

pub fn maxpool_layer() -> Vec<(String, f64)> {
    let x = random(&[6, 4, 2], 6);
    let r = random(&[3, 2, 2], 7);
    let (_, arg) = maxpool2d(&x).unwrap();
    let dx = maxpool2d_backward(x.shape(), &arg, &r).unwrap();
    vec![err(
        "maxpool",
        &dx,
        &numeric_grad(&x, &|x| dot(&maxpool2d(x).unwrap().0, &r)),
    )]
}

pub fn global_average_pool() -> Vec<(String, f64)> {
    let x = random(&[4, 6, 3], 8);
    let r = random(&[3], 9);
    let dx = global_avg_pool_backward(x.shape(), &r).unwrap();
    vec![err(
        "global average pool",
        &dx,
        &numeric_grad(&x, &|x| dot(&global_avg_pool(x).unwrap(), &r)),
    )]
}

pub fn dense_layer() -> Vec<(String, f64)> {
    let x = random(&[3, 5], 10);
    let w = random(&[5, 4], 11);
    let b = random(&[4], 12);
    let r = random(&[3, 4], 13);
    let (dx, dw, db) = dense_backward(&x, &w, &r).unwrap();
    let f = |x: &Tensor, w: &Tensor, b: &Tensor| dot(&dense_forward(x, w, Some(b)).unwrap(), &r);
    vec![
        err("dense input", &dx, &numeric_grad(&x, &|x| f(x, &w, &b))),
        err("dense weight", &dw, &numeric_grad(&w, &|w| f(&x, w, &b))),
        err("dense bias", &db, &numeric_grad(&b, &|b| f(&x, &w, b))),
    ]
}

pub fn softmax_and_loss() -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for kind in [LossKind::BinaryPerClass, LossKind::Categorical] {
        for target in [0, 5] {
            let z = random(&[1, 8], 14 + target as u64);
            let y = one_hot(target, 8);
            let f = |z: &Tensor| sample_loss(kind, softmax_rows(z).unwrap().data(), &y);
            let p = softmax_rows(&z).unwrap();
            let dz = softmax_backward(p.data(), &loss_grad_probs(kind, p.data(), &y));
            let dz = Tensor::from_vec(&[1, 8], dz).unwrap();
            out.push(err(
                &format!("softmax + {kind} loss, target {target}"),
                &dz,
                &numeric_grad(&z, &f),
            ));
        }
    }
    out
}

/// Every parameter tensor of the tiny model, both heads and both losses.
pub fn composed_model() -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for head in [HeadMode::Dense, HeadMode::GlobalAvgPool] {
        for kind in [LossKind::BinaryPerClass, LossKind::Categorical] {
            let model = CnnModel::init(super::tiny_spec(head), 21).unwrap();
            let images: Vec<Tensor> = (0..3)
                .map(|s| {
                    let t = random(&[8, 8, 1], 30 + s);
                    Tensor::from_vec(&[8, 8, 1], t.data().iter().map(|v| v.abs()).collect()).unwrap()
                })
                .collect();
            let refs: Vec<&Tensor> = images.iter().collect();
            let targets = [1usize, 6, 3];
            let fwd = model.forward_batch(&refs, Execution::Sequential).unwrap();
            let grads = model.backward(&fwd, &targets, kind, Execution::Sequential).unwrap();
            for (layer, g) in grads.iter().enumerate() {
                let loss_at = |p: &Tensor| {
                    let mut m = model.clone();
                    m.params_mut()[layer] = p.clone();
                    let f = m.forward_batch(&refs, Execution::Sequential).unwrap();
                    m.loss(&f, &targets, kind).unwrap()
                };
                let numeric = numeric_grad(&model.params()[layer], &loss_at);
                out.push(err(&format!("model {head}/{kind} param {layer}"), g, &numeric));
            }
        }
    }
    out
}
