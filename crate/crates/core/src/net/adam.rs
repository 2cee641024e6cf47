use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Tensors, DEFAULT_LR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: DEFAULT_LR,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment accumulators, one per parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new<T: Tensors>(params: &T, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<f64>> = params.slices().iter().map(|s| vec![0.0; s.len()]).collect();
        OptimizerState {
            config,
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }
}

/// One bias-corrected adaptive-moment update. A non-finite gradient is an
/// error and leaves parameters and state untouched.
pub fn adam_step<T: Tensors>(params: &mut T, grads: &T, state: &mut OptimizerState) -> Result<()> {
    let gs = grads.slices();
    if gs.len() != state.m.len() || gs.iter().zip(&state.m).any(|(g, m)| g.len() != m.len()) {
        return Err(Error::invalid("gradient shape does not match optimizer state"));
    }
    if !grads.all_finite() {
        return Err(Error::NonFinite(format!("gradient at step {}", state.step + 1)));
    }
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (((p, g), m), v) in params
        .slices_mut()
        .into_iter()
        .zip(gs)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for i in 0..p.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
