use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierParams;
use crate::encoder::GrudParams;
use crate::error::{Error, Result};
use crate::nn::{ParamMatrix, Parameterized, Rng};
use crate::policy::{HopPolicyParams, StopPolicyParams};
use crate::series::NormStats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_size: usize,
    pub num_classes: usize,
    pub hidden_size: usize,
    pub classifier_hidden: usize,
    /// Hop standard deviation as a fraction of the horizon.
    pub sigma: f64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 || self.num_classes < 2 || self.hidden_size == 0 || self.classifier_hidden == 0 {
            return Err(Error::InvalidArgument(alloc::format!("degenerate model shape {self:?}")));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "hop sigma must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Learned per-step return estimate `b = w · h + c`. Its input is treated
/// as a constant so its squared-error loss only trains this head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub w: ParamMatrix,
    pub b: ParamMatrix,
}

impl BaselineParams {
    pub fn new(hidden_size: usize, rng: &mut Rng) -> Self {
        Self {
            w: ParamMatrix::uniform(1, hidden_size, rng),
            b: ParamMatrix::bias(1),
        }
    }

    pub fn value(&self, h: &[f64]) -> f64 {
        self.b.values()[0] + self.w.values().iter().zip(h).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn backward(&mut self, h: &[f64], d_value: f64) {
        self.w.grad.add_outer(&[d_value], h, 1.0);
        self.b.grad.data[0] += d_value;
    }
}

impl Parameterized for BaselineParams {
    fn params(&self) -> Vec<&ParamMatrix> {
        vec![&self.w, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut ParamMatrix> {
        vec![&mut self.w, &mut self.b]
    }
}

/// Every learned component plus the normalization the model was trained
/// under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub config: ModelConfig,
    pub encoder: GrudParams,
    pub classifier: ClassifierParams,
    pub stop: StopPolicyParams,
    pub hop: HopPolicyParams,
    pub baseline: BaselineParams,
    pub normalization: Option<NormStats>,
}

impl ModelBundle {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::new(seed);
        let ModelConfig {
            input_size,
            num_classes,
            hidden_size,
            classifier_hidden,
            ..
        } = config;
        Ok(Self {
            config,
            encoder: GrudParams::new(input_size, hidden_size, &mut rng),
            classifier: ClassifierParams::new(hidden_size, classifier_hidden, num_classes, &mut rng),
            stop: StopPolicyParams::new(hidden_size, num_classes, &mut rng),
            hop: HopPolicyParams::new(hidden_size, num_classes, &mut rng),
            baseline: BaselineParams::new(hidden_size, &mut rng),
            normalization: None,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.value.is_finite())
    }
}

impl Parameterized for ModelBundle {
    fn params(&self) -> Vec<&ParamMatrix> {
        let mut out = self.encoder.params();
        out.extend(self.classifier.params());
        out.extend(self.stop.params());
        out.extend(self.hop.params());
        out.extend(self.baseline.params());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut ParamMatrix> {
        let mut out = self.encoder.params_mut();
        out.extend(self.classifier.params_mut());
        out.extend(self.stop.params_mut());
        out.extend(self.hop.params_mut());
        out.extend(self.baseline.params_mut());
        out
    }
}
