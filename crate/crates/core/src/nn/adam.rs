use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::nn::{Matrix, Parameterized};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 coefficient added to the gradient of decay-flagged parameters.
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
        }
    }
}

/// Moment accumulators, one pair per parameter matrix in
/// [`Parameterized::params`] order.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
}

impl AdamState {
    pub fn new<M: Parameterized + ?Sized>(model: &M, config: AdamConfig) -> Self {
        let shapes: Vec<(usize, usize)> = model.params().iter().map(|p| (p.rows(), p.cols())).collect();
        Self {
            config,
            step: 0,
            first: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            second: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
        }
    }

    /// One bias-corrected Adam update over every parameter, then zero the
    /// gradients.
    pub fn step<M: Parameterized + ?Sized>(&mut self, model: &mut M) {
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - libm::pow(beta1, t as f64);
        let bc2 = 1.0 - libm::pow(beta2, t as f64);
        for ((p, m), v) in model
            .params_mut()
            .into_iter()
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            assert_eq!(p.len(), m.len(), "optimizer state does not match model");
            let wd = if p.decay { weight_decay } else { 0.0 };
            for i in 0..p.len() {
                let g = p.grad.data[i] + wd * p.value.data[i];
                let mi = beta1 * m.data[i] + (1.0 - beta1) * g;
                let vi = beta2 * v.data[i] + (1.0 - beta2) * g * g;
                m.data[i] = mi;
                v.data[i] = vi;
                let m_hat = mi / bc1;
                let v_hat = vi / bc2;
                p.value.data[i] -= learning_rate * m_hat / (math::sqrt(v_hat) + eps);
            }
            p.zero_grad();
        }
    }
}
