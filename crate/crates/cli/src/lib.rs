//! File formats, checkpoints and the `earlyclass` command-line tool.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use error::{CliError, Result};
