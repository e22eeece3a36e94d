use serde::{Deserialize, Serialize};

use super::AdamConfig;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            config,
        }
    }
}

/// One Adam update of `params` in place, with bias correction `1 - beta^t`.
pub fn adam_step(params: &mut [f64], gradients: &[f64], state: &mut AdamState) -> Result<()> {
    if params.len() != gradients.len() || params.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "adam: {} params, {} gradients, {} moments",
            params.len(),
            gradients.len(),
            state.m.len()
        )));
    }
    state.t += 1;
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let c1 = 1.0 - beta1.powi(state.t as i32);
    let c2 = 1.0 - beta2.powi(state.t as i32);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(gradients)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}
