//! Adam and plain gradient descent.

use super::{NnError, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first_moment: Vec<Tensor>,
    second_moment: Vec<Tensor>,
}

impl AdamState {
    pub fn new(learning_rate: f64, params: &[Tensor]) -> AdamState {
        let zeros = || params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first_moment: zeros(),
            second_moment: zeros(),
        }
    }

    pub fn first_moment(&self) -> &[Tensor] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Tensor] {
        &self.second_moment
    }
}

fn check_shapes(params: &[Tensor], grads: &[Tensor], moments: &[Tensor]) -> Result<(), NnError> {
    if params.len() != grads.len() || params.len() != moments.len() {
        return Err(NnError::ShapeMismatch(format!(
            "{} parameters, {} gradients, {} moment slots",
            params.len(),
            grads.len(),
            moments.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || p.shape() != moments[i].shape() {
            return Err(NnError::ShapeMismatch(format!(
                "parameter {i}: {:?} vs gradient {:?}",
                p.shape(),
                g.shape()
            )));
        }
    }
    Ok(())
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut [Tensor], grads: &[Tensor], state: &mut AdamState) -> Result<(), NnError> {
    check_shapes(params, grads, &state.first_moment)?;
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let lr = state.learning_rate;
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        for (((p, &g), m), v) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

pub fn sgd_step(params: &mut [Tensor], grads: &[Tensor], learning_rate: f64) -> Result<(), NnError> {
    check_shapes(params, grads, grads)?;
    for (p, g) in params.iter_mut().zip(grads) {
        p.data_mut()
            .iter_mut()
            .zip(g.data())
            .for_each(|(p, g)| *p -= learning_rate * g);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Adam(AdamState),
    Sgd { learning_rate: f64 },
}

impl Optimizer {
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<(), NnError> {
        match self {
            Optimizer::Adam(state) => adam_step(params, grads, state),
            Optimizer::Sgd { learning_rate } => sgd_step(params, grads, *learning_rate),
        }
    }
}
