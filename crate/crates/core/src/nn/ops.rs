use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::nn::ParamMatrix;

/// `W x + b`. `b` must be a column of `W.rows()` entries.
pub fn linear(x: &[f64], w: &ParamMatrix, b: &ParamMatrix) -> Result<Vec<f64>> {
    if x.len() != w.cols() {
        return Err(Error::DimensionMismatch {
            context: "linear input",
            expected: w.cols(),
            actual: x.len(),
        });
    }
    if b.len() != w.rows() {
        return Err(Error::DimensionMismatch {
            context: "linear bias",
            expected: w.rows(),
            actual: b.len(),
        });
    }
    let mut out = b.values().to_vec();
    w.value.mul_vec_acc(x, &mut out);
    Ok(out)
}

/// Accumulates `dW += dy xᵀ`, `db += dy` and returns `Wᵀ dy`.
pub fn linear_backward(x: &[f64], dy: &[f64], w: &mut ParamMatrix, b: &mut ParamMatrix) -> Vec<f64> {
    w.grad.add_outer(dy, x, 1.0);
    for (g, d) in b.grad.data.iter_mut().zip(dy) {
        *g += d;
    }
    let mut dx = vec![0.0; x.len()];
    w.value.mul_t_vec_acc(dy, &mut dx);
    dx
}

pub fn sigmoid(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| math::sigmoid(x)).collect()
}

pub fn tanh(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| math::tanh(x)).collect()
}

pub fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect()
}

/// Softmax with max subtraction.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = v.iter().map(|&x| math::exp(x - max)).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= sum);
    out
}

pub fn log_softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + math::ln(v.iter().map(|&x| math::exp(x - max)).sum::<f64>());
    v.iter().map(|&x| x - lse).collect()
}

/// Vector-Jacobian product of softmax: given `p = softmax(z)` and `dL/dp`,
/// returns `dL/dz`.
pub fn softmax_backward(p: &[f64], dp: &[f64]) -> Vec<f64> {
    let dot: f64 = p.iter().zip(dp).map(|(a, b)| a * b).sum();
    p.iter().zip(dp).map(|(pi, di)| pi * (di - dot)).collect()
}

const PROB_FLOOR: f64 = 1e-12;

/// `-ln(y_hat[y])`, with the probability clamped below at 1e-12.
pub fn cross_entropy(y_hat: &[f64], y: usize) -> f64 {
    -math::ln(y_hat[y].max(PROB_FLOOR))
}

/// Gradient of `cross_entropy(softmax(z), y)` with respect to the logits
/// `z`, written in terms of `p = softmax(z)`.
pub fn cross_entropy_logits_grad(p: &[f64], y: usize) -> Vec<f64> {
    let mut g = p.to_vec();
    g[y] -= 1.0;
    g
}
