use serde::{Deserialize, Serialize};

use super::params::NetworkParams;
use super::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, one buffer per learnable tensor.
#[derive(Clone, Debug)]
pub struct AdamState<F> {
    first: Vec<Vec<F>>,
    second: Vec<Vec<F>>,
    step: u64,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(params: &NetworkParams<F>) -> Self {
        let zeros: Vec<Vec<F>> = params.trainable().iter().map(|t| vec![F::zero(); t.len()]).collect();
        AdamState {
            first: zeros.clone(),
            second: zeros,
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update.
pub fn adam_step<F: Scalar>(params: &mut NetworkParams<F>, grads: &NetworkParams<F>, state: &mut AdamState<F>, config: &AdamConfig) {
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (F::of(config.beta1), F::of(config.beta2));
    let correction1 = F::one() - F::of(config.beta1.powi(t));
    let correction2 = F::one() - F::of(config.beta2.powi(t));
    let lr = F::of(config.learning_rate);
    let eps = F::of(config.epsilon);

    let grads = grads.trainable();
    for (k, tensor) in params.trainable_mut().into_iter().enumerate() {
        let (m, v) = (&mut state.first[k], &mut state.second[k]);
        for (i, w) in tensor.iter_mut().enumerate() {
            let g = grads[k][i];
            m[i] = b1 * m[i] + (F::one() - b1) * g;
            v[i] = b2 * v[i] + (F::one() - b2) * g * g;
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
