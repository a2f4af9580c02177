//! Prefix classifier: one ReLU hidden layer and a softmax output.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::nn::{linear, linear_backward, relu, softmax, softmax_backward, ParamMatrix, Parameterized, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub w1: ParamMatrix,
    pub b1: ParamMatrix,
    pub w2: ParamMatrix,
    pub b2: ParamMatrix,
}

#[derive(Debug, Clone)]
pub struct ClassifierCache {
    h: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ClassifierParams {
    pub fn new(hidden_size: usize, classifier_hidden: usize, num_classes: usize, rng: &mut Rng) -> Self {
        Self {
            w1: ParamMatrix::uniform(classifier_hidden, hidden_size, rng),
            b1: ParamMatrix::bias(classifier_hidden),
            w2: ParamMatrix::uniform(num_classes, classifier_hidden, rng),
            b2: ParamMatrix::bias(num_classes),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.w2.rows()
    }

    /// Class probabilities for a prefix embedding.
    pub fn classify(&self, h: &[f64]) -> Vec<f64> {
        self.forward(h).probs
    }

    pub fn forward(&self, h: &[f64]) -> ClassifierCache {
        let hidden_pre = linear(h, &self.w1, &self.b1).expect("classifier input width");
        let hidden = relu(&hidden_pre);
        let logits = linear(&hidden, &self.w2, &self.b2).expect("classifier layer widths");
        ClassifierCache {
            h: h.to_vec(),
            hidden_pre,
            hidden,
            probs: softmax(&logits),
        }
    }

    /// Backward from a gradient on the logits plus a gradient on the
    /// probabilities (from consumers of ŷ). Returns the gradient on `h`.
    pub fn backward(&mut self, cache: &ClassifierCache, d_logits: &[f64], d_probs: Option<&[f64]>) -> Vec<f64> {
        let mut dz = d_logits.to_vec();
        if let Some(dp) = d_probs {
            for (a, b) in dz.iter_mut().zip(softmax_backward(&cache.probs, dp)) {
                *a += b;
            }
        }
        let d_hidden = linear_backward(&cache.hidden, &dz, &mut self.w2, &mut self.b2);
        let d_pre: Vec<f64> = d_hidden
            .iter()
            .zip(&cache.hidden_pre)
            .map(|(d, a)| if *a > 0.0 { *d } else { 0.0 })
            .collect();
        if d_pre.iter().all(|&v| v == 0.0) {
            return vec![0.0; cache.h.len()];
        }
        linear_backward(&cache.h, &d_pre, &mut self.w1, &mut self.b1)
    }
}

impl Parameterized for ClassifierParams {
    fn params(&self) -> Vec<&ParamMatrix> {
        vec![&self.w1, &self.b1, &self.w2, &self.b2]
    }

    fn params_mut(&mut self) -> Vec<&mut ParamMatrix> {
        vec![&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }
}
