//! Cross-entropy losses on softmax outputs.

use std::fmt;
use std::str::FromStr;

use super::NnError;

/// Probabilities are clipped to `[CLIP, 1 - CLIP]` before taking logs.
pub const CLIP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    /// `-sum_c [y_c ln a_c + (1 - y_c) ln(1 - a_c)]`, summed over all classes.
    #[default]
    BinaryPerClass,
    /// `-ln a_t` for the target class only.
    Categorical,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::BinaryPerClass => "eq3",
            LossKind::Categorical => "categorical",
        })
    }
}

impl FromStr for LossKind {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eq3" | "binary" => Ok(LossKind::BinaryPerClass),
            "categorical" | "ce" => Ok(LossKind::Categorical),
            _ => Err(NnError::Config(format!("unknown loss `{s}`"))),
        }
    }
}

fn clip(a: f64) -> f64 {
    a.clamp(CLIP, 1.0 - CLIP)
}

fn inside(a: f64) -> bool {
    a > CLIP && a < 1.0 - CLIP
}

/// Loss of one probability vector against a one-hot (or soft) target.
pub fn sample_loss(kind: LossKind, probs: &[f64], target: &[f64]) -> f64 {
    match kind {
        LossKind::BinaryPerClass => -probs
            .iter()
            .zip(target)
            .map(|(&a, &y)| {
                let a = clip(a);
                y * a.ln() + (1.0 - y) * (1.0 - a).ln()
            })
            .sum::<f64>(),
        LossKind::Categorical => -probs.iter().zip(target).map(|(&a, &y)| y * clip(a).ln()).sum::<f64>(),
    }
}

/// Eq. (3) style loss for a single probability vector.
pub fn loss_eq3(probs: &[f64], target: &[f64]) -> f64 {
    sample_loss(LossKind::BinaryPerClass, probs, target)
}

/// Derivative of [`sample_loss`] with respect to the probabilities; zero
/// wherever the clip is active.
pub fn loss_grad_probs(kind: LossKind, probs: &[f64], target: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .zip(target)
        .map(|(&a, &y)| {
            if !inside(a) {
                return 0.0;
            }
            match kind {
                LossKind::BinaryPerClass => -y / a + (1.0 - y) / (1.0 - a),
                LossKind::Categorical => -y / a,
            }
        })
        .collect()
}

/// Chains a probability gradient through softmax: `dz_i = a_i (g_i - sum_j a_j g_j)`.
pub fn softmax_backward(probs: &[f64], grad_probs: &[f64]) -> Vec<f64> {
    let dot: f64 = probs.iter().zip(grad_probs).map(|(a, g)| a * g).sum();
    probs.iter().zip(grad_probs).map(|(a, g)| a * (g - dot)).collect()
}

pub fn one_hot(class: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[class] = 1.0;
    v
}
