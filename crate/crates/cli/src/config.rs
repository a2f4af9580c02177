//! Run configuration files.
//!
//! A TOML file may set any subset of the keys below; command-line flags
//! override the file, and unset keys take their defaults. The fully
//! resolved configuration is written next to every run's outputs.

use std::fs;
use std::path::Path;

use earlyclass_core::training::{HopMode, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

macro_rules! run_config {
    ($($(#[$doc:meta])* $name:ident: $ty:ty = $default:expr;)*) => {
        /// A partial configuration: every key is optional.
        #[derive(Debug, Clone, Default, PartialEq, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct RunConfig {
            $($(#[$doc])* pub $name: Option<$ty>,)*
        }

        /// A configuration with every key filled in.
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct ResolvedConfig {
            $($(#[$doc])* pub $name: $ty,)*
        }

        impl RunConfig {
            /// Keys set in `over` win.
            pub fn merge(self, over: RunConfig) -> RunConfig {
                RunConfig {
                    $($name: over.$name.or(self.$name),)*
                }
            }

            pub fn resolve(self) -> ResolvedConfig {
                let defaults = TrainConfig::default();
                ResolvedConfig {
                    $($name: self.$name.unwrap_or_else(|| $default(&defaults)),)*
                }
            }
        }
    };
}

run_config! {
    lambda: f64 = |d: &TrainConfig| d.lambda;
    alpha: f64 = |d: &TrainConfig| d.alpha;
    sigma: f64 = |d: &TrainConfig| d.sigma;
    learning_rate: f64 = |d: &TrainConfig| d.learning_rate;
    weight_decay: f64 = |d: &TrainConfig| d.weight_decay;
    epochs: usize = |d: &TrainConfig| d.epochs;
    batch_size: usize = |d: &TrainConfig| d.batch_size;
    max_hops: usize = |d: &TrainConfig| d.max_hops;
    min_hop_fraction: f64 = |d: &TrainConfig| d.min_hop_fraction;
    hidden_size: usize = |d: &TrainConfig| d.hidden_size;
    classifier_hidden: Option<usize> = |d: &TrainConfig| d.classifier_hidden;
    seed: u64 = |d: &TrainConfig| d.seed;
    wait_bias: f64 = |d: &TrainConfig| d.wait_bias;
    snap_to_grid: bool = |d: &TrainConfig| d.snap_to_grid;
    deterministic_eval_hop: bool = |d: &TrainConfig| d.deterministic_eval_hop;
    detach_policy_inputs: bool = |d: &TrainConfig| d.detach_policy_inputs;
    train_hop_mode: HopMode = |d: &TrainConfig| d.train_hop_mode;
    /// Fraction of the data held out for validation.
    val_fraction: f64 = |_: &TrainConfig| 0.1;
    /// Fraction of the data held out for testing (sweeps only).
    test_fraction: f64 = |_: &TrainConfig| 0.2;
    split_seed: u64 = |_: &TrainConfig| 0;
    /// Learning rates to search; empty means `learning_rate` alone.
    lr_grid: Vec<f64> = |_: &TrainConfig| Vec::new();
    /// Weight decays to search; empty means `weight_decay` alone.
    wd_grid: Vec<f64> = |_: &TrainConfig| Vec::new();
    /// Observation horizon of the input data.
    horizon: f64 = |_: &TrainConfig| 1.0;
}

impl RunConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

impl ResolvedConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda: self.lambda,
            alpha: self.alpha,
            sigma: self.sigma,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            epochs: self.epochs,
            batch_size: self.batch_size,
            max_hops: self.max_hops,
            min_hop_fraction: self.min_hop_fraction,
            hidden_size: self.hidden_size,
            classifier_hidden: self.classifier_hidden,
            seed: self.seed,
            wait_bias: self.wait_bias,
            snap_to_grid: self.snap_to_grid,
            deterministic_eval_hop: self.deterministic_eval_hop,
            detach_policy_inputs: self.detach_policy_inputs,
            train_hop_mode: self.train_hop_mode,
        }
    }

    /// Rejects values no run can use.
    pub fn validate(&self) -> Result<()> {
        self.train_config()
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        for (name, v) in [("val_fraction", self.val_fraction), ("test_fraction", self.test_fraction)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(CliError::Usage(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(CliError::Usage(format!("horizon must be positive, got {}", self.horizon)));
        }
        let grid = self.lr_grid.iter().chain(&self.wd_grid);
        if let Some(v) = grid.copied().find(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CliError::Usage(format!("grid values must be finite and non-negative, got {v}")));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("resolved configuration serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()).map_err(CliError::io(path))
    }
}
