//! Layer kernels. Feature maps are `[H, W, C]`, conv kernels `[3, 3, Cin, Cout]`.

use super::gemm::gemm;
use super::{NnError, Tensor};

fn hwc(t: &Tensor, what: &str) -> Result<(usize, usize, usize), NnError> {
    match *t.shape() {
        [h, w, c] => Ok((h, w, c)),
        ref s => Err(NnError::ShapeMismatch(format!("{what}: expected [H, W, C], got {s:?}"))),
    }
}

fn kernel_dims(k: &Tensor, cin: usize) -> Result<usize, NnError> {
    match *k.shape() {
        [3, 3, ci, co] if ci == cin => Ok(co),
        ref s => Err(NnError::ShapeMismatch(format!(
            "conv kernels must be [3, 3, {cin}, Cout], got {s:?}"
        ))),
    }
}

/// `[H*W, 9*C]` patch matrix for a 3x3, stride-1, zero-padded convolution.
fn im2col(input: &[f64], h: usize, w: usize, c: usize) -> Vec<f64> {
    let row_len = 9 * c;
    let mut cols = vec![0.0; h * w * row_len];
    for y in 0..h {
        for x in 0..w {
            let row = &mut cols[(y * w + x) * row_len..(y * w + x + 1) * row_len];
            for ky in 0..3 {
                let iy = y as isize + ky as isize - 1;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let ix = x as isize + kx as isize - 1;
                    if ix < 0 || ix >= w as isize {
                        continue;
                    }
                    let src = (iy as usize * w + ix as usize) * c;
                    let dst = (ky * 3 + kx) * c;
                    row[dst..dst + c].copy_from_slice(&input[src..src + c]);
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], h: usize, w: usize, c: usize) -> Vec<f64> {
    let row_len = 9 * c;
    let mut out = vec![0.0; h * w * c];
    for y in 0..h {
        for x in 0..w {
            let row = &cols[(y * w + x) * row_len..(y * w + x + 1) * row_len];
            for ky in 0..3 {
                let iy = y as isize + ky as isize - 1;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let ix = x as isize + kx as isize - 1;
                    if ix < 0 || ix >= w as isize {
                        continue;
                    }
                    let dst = (iy as usize * w + ix as usize) * c;
                    let src = (ky * 3 + kx) * c;
                    for (o, v) in out[dst..dst + c].iter_mut().zip(&row[src..src + c]) {
                        *o += v;
                    }
                }
            }
        }
    }
    out
}

/// 3x3 cross-correlation, stride 1, one pixel of zero padding, no bias.
pub fn conv2d_forward(input: &Tensor, kernels: &Tensor) -> Result<Tensor, NnError> {
    let (h, w, cin) = hwc(input, "conv input")?;
    let cout = kernel_dims(kernels, cin)?;
    let cols = im2col(input.data(), h, w, cin);
    let mut out = vec![0.0; h * w * cout];
    gemm(false, false, h * w, cout, 9 * cin, &cols, kernels.data(), 0.0, &mut out);
    Tensor::from_vec(&[h, w, cout], out)
}

/// Returns `(d_input, d_kernels)` for [`conv2d_forward`].
pub fn conv2d_backward(input: &Tensor, kernels: &Tensor, grad_out: &Tensor) -> Result<(Tensor, Tensor), NnError> {
    let (h, w, cin) = hwc(input, "conv input")?;
    let cout = kernel_dims(kernels, cin)?;
    if grad_out.shape() != [h, w, cout] {
        return Err(NnError::ShapeMismatch(format!(
            "conv output gradient {:?}, expected {:?}",
            grad_out.shape(),
            [h, w, cout]
        )));
    }
    let cols = im2col(input.data(), h, w, cin);
    let mut d_kernels = vec![0.0; 9 * cin * cout];
    gemm(
        true,
        false,
        9 * cin,
        cout,
        h * w,
        &cols,
        grad_out.data(),
        0.0,
        &mut d_kernels,
    );
    let mut d_cols = cols;
    gemm(
        false,
        true,
        h * w,
        9 * cin,
        cout,
        grad_out.data(),
        kernels.data(),
        0.0,
        &mut d_cols,
    );
    let d_input = col2im(&d_cols, h, w, cin);
    Ok((
        Tensor::from_vec(&[h, w, cin], d_input)?,
        Tensor::from_vec(&[3, 3, cin, cout], d_kernels)?,
    ))
}

pub fn relu(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

/// Gradient through ReLU given the layer's output (positive where active).
pub fn relu_backward(output: &Tensor, grad_out: &Tensor) -> Tensor {
    let mut g = grad_out.clone();
    g.data_mut().iter_mut().zip(output.data()).for_each(|(g, &o)| {
        if o <= 0.0 {
            *g = 0.0
        }
    });
    g
}

/// 2x2 max pooling with stride 2.
///
/// Also returns, per output element, the flat input index of the winner.
/// Ties go to the first element of the block in row-major order.
pub fn maxpool2d(input: &Tensor) -> Result<(Tensor, Vec<usize>), NnError> {
    let (h, w, c) = hwc(input, "pool input")?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(NnError::OddDimensions { height: h, width: w });
    }
    let (oh, ow) = (h / 2, w / 2);
    let x = input.data();
    let mut out = vec![0.0; oh * ow * c];
    let mut argmax = vec![0usize; oh * ow * c];
    for oy in 0..oh {
        for ox in 0..ow {
            let taps = [
                ((2 * oy) * w + 2 * ox) * c,
                ((2 * oy) * w + 2 * ox + 1) * c,
                ((2 * oy + 1) * w + 2 * ox) * c,
                ((2 * oy + 1) * w + 2 * ox + 1) * c,
            ];
            let o = (oy * ow + ox) * c;
            for ch in 0..c {
                let mut best = taps[0] + ch;
                for &t in &taps[1..] {
                    if x[t + ch] > x[best] {
                        best = t + ch;
                    }
                }
                out[o + ch] = x[best];
                argmax[o + ch] = best;
            }
        }
    }
    Ok((Tensor::from_vec(&[oh, ow, c], out)?, argmax))
}

pub fn maxpool2d_backward(input_shape: &[usize], argmax: &[usize], grad_out: &Tensor) -> Result<Tensor, NnError> {
    if argmax.len() != grad_out.len() {
        return Err(NnError::ShapeMismatch("pool gradient / argmax length".into()));
    }
    let mut g = Tensor::zeros(input_shape);
    let gd = g.data_mut();
    for (&i, &v) in argmax.iter().zip(grad_out.data()) {
        gd[i] += v;
    }
    Ok(g)
}

/// Mean over the spatial axes: `[H, W, C] -> [C]`.
pub fn global_avg_pool(input: &Tensor) -> Result<Tensor, NnError> {
    let (h, w, c) = hwc(input, "global pool input")?;
    let mut out = vec![0.0; c];
    for px in input.data().chunks_exact(c) {
        out.iter_mut().zip(px).for_each(|(o, v)| *o += v);
    }
    let inv = 1.0 / (h * w) as f64;
    out.iter_mut().for_each(|o| *o *= inv);
    Tensor::from_vec(&[c], out)
}

pub fn global_avg_pool_backward(input_shape: &[usize], grad_out: &Tensor) -> Result<Tensor, NnError> {
    let [h, w, c] = *input_shape else {
        return Err(NnError::ShapeMismatch(format!("global pool input {input_shape:?}")));
    };
    if grad_out.len() != c {
        return Err(NnError::ShapeMismatch("global pool gradient length".into()));
    }
    let inv = 1.0 / (h * w) as f64;
    let mut g = Vec::with_capacity(h * w * c);
    for _ in 0..h * w {
        g.extend(grad_out.data().iter().map(|v| v * inv));
    }
    Tensor::from_vec(input_shape, g)
}

/// Batched affine map `[B, D] x [D, H] (+ [H])`.
pub fn dense_forward(input: &Tensor, weight: &Tensor, bias: Option<&Tensor>) -> Result<Tensor, NnError> {
    let (b, d, h) = dense_dims(input, weight)?;
    let mut out = vec![0.0; b * h];
    if let Some(bias) = bias {
        if bias.shape() != [h] {
            return Err(NnError::ShapeMismatch(format!("bias {:?} for {h} units", bias.shape())));
        }
        for row in out.chunks_exact_mut(h) {
            row.copy_from_slice(bias.data());
        }
    }
    let beta = if bias.is_some() { 1.0 } else { 0.0 };
    gemm(false, false, b, h, d, input.data(), weight.data(), beta, &mut out);
    Tensor::from_vec(&[b, h], out)
}

/// Returns `(d_input, d_weight, d_bias)`; `d_bias` is always the column sum.
pub fn dense_backward(input: &Tensor, weight: &Tensor, grad_out: &Tensor) -> Result<(Tensor, Tensor, Tensor), NnError> {
    let (b, d, h) = dense_dims(input, weight)?;
    if grad_out.shape() != [b, h] {
        return Err(NnError::ShapeMismatch(format!(
            "dense output gradient {:?}, expected [{b}, {h}]",
            grad_out.shape()
        )));
    }
    let mut d_weight = vec![0.0; d * h];
    gemm(true, false, d, h, b, input.data(), grad_out.data(), 0.0, &mut d_weight);
    let mut d_input = vec![0.0; b * d];
    gemm(false, true, b, d, h, grad_out.data(), weight.data(), 0.0, &mut d_input);
    let mut d_bias = vec![0.0; h];
    for row in grad_out.data().chunks_exact(h) {
        d_bias.iter_mut().zip(row).for_each(|(a, v)| *a += v);
    }
    Ok((
        Tensor::from_vec(&[b, d], d_input)?,
        Tensor::from_vec(&[d, h], d_weight)?,
        Tensor::from_vec(&[h], d_bias)?,
    ))
}

fn dense_dims(input: &Tensor, weight: &Tensor) -> Result<(usize, usize, usize), NnError> {
    match (input.shape(), weight.shape()) {
        (&[b, d], &[wd, h]) if d == wd => Ok((b, d, h)),
        (i, w) => Err(NnError::ShapeMismatch(format!("dense input {i:?} with weight {w:?}"))),
    }
}

/// Row-wise softmax of a `[B, C]` tensor.
pub fn softmax_rows(logits: &Tensor) -> Result<Tensor, NnError> {
    let &[_, c] = logits.shape() else {
        return Err(NnError::ShapeMismatch(format!("softmax input {:?}", logits.shape())));
    };
    let mut out = logits.clone();
    for row in out.data_mut().chunks_exact_mut(c) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(out)
}
