use serde::{Deserialize, Serialize};

use super::{GcnParams, Gradients, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Gradients,
    pub v: Gradients,
    pub step: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(params: &GcnParams, config: AdamConfig) -> Self {
        Self {
            m: Gradients::zeros_like(params),
            v: Gradients::zeros_like(params),
            step: 0,
            config,
        }
    }
}

fn update(param: &mut Matrix, grad: &Matrix, m: &mut Matrix, v: &mut Matrix, cfg: &AdamConfig, step: u64) {
    let bc1 = 1.0 - cfg.beta1.powi(step as i32);
    let bc2 = 1.0 - cfg.beta2.powi(step as i32);
    let it = param
        .as_mut_slice()
        .iter_mut()
        .zip(grad.as_slice())
        .zip(m.as_mut_slice().iter_mut().zip(v.as_mut_slice()));
    for ((p, &g), (mi, vi)) in it {
        *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * g;
        *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * g * g;
        let m_hat = *mi / bc1;
        let v_hat = *vi / bc2;
        *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

/// One bias-corrected Adam update of both weight matrices.
pub fn adam_step(params: &mut GcnParams, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if grads.w1.shape() != params.w1.shape() || grads.w2.shape() != params.w2.shape() {
        return Err(Error::Shape("gradient shapes differ from parameters".into()));
    }
    if !grads.w1.is_finite() {
        return Err(Error::NonFinite("gradient of w1".into()));
    }
    if !grads.w2.is_finite() {
        return Err(Error::NonFinite("gradient of w2".into()));
    }
    state.step += 1;
    let cfg = state.config;
    update(&mut params.w1, &grads.w1, &mut state.m.w1, &mut state.v.w1, &cfg, state.step);
    update(&mut params.w2, &grads.w2, &mut state.m.w2, &mut state.v.w2, &cfg, state.step);
    Ok(())
}
