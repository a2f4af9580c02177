//! JSON model checkpoints.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use earlyclass_core::training::TrainConfig;
use earlyclass_core::ModelBundle;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FORMAT: &str = "earlyclass-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    /// The configuration the model was trained with.
    pub train_config: TrainConfig,
    pub model: ModelBundle,
}

impl Checkpoint {
    pub fn new(model: ModelBundle, train_config: TrainConfig) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            train_config,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        }
        let file = File::create(path).map_err(CliError::io(path))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, self).map_err(|e| CliError::format(path, e))?;
        w.flush().map_err(CliError::io(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(CliError::io(path))?;
        let ckpt: Self = serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::format(path, e))?;
        if ckpt.format != FORMAT {
            return Err(CliError::format(path, format!("not a checkpoint (format `{}`)", ckpt.format)));
        }
        if ckpt.version != VERSION {
            return Err(CliError::format(
                path,
                format!("unsupported checkpoint version {} (expected {VERSION})", ckpt.version),
            ));
        }
        ckpt.model.config.validate()?;
        if !ckpt.model.is_finite() {
            return Err(CliError::format(path, "checkpoint holds non-finite parameters"));
        }
        Ok(ckpt)
    }
}
