//! Early classification of irregularly-sampled multivariate time series.
//!
//! The crate is `no_std` (with `alloc`) and holds every algorithmic piece:
//!
//! - [`series`]: the irregular series data model, normalization, splitting
//!   and the merged observation grid.
//! - [`nn`]: parameter storage, affine maps, activations, losses, Adam,
//!   finite-difference gradient checks and seeded randomness.
//! - [`encoder`]: a GRU-D prefix encoder evaluated at arbitrary real times.
//! - [`classifier`]: the prefix classifier.
//! - [`policy`]: the Stop/Wait policy, the Gaussian hop policy and the
//!   exploration schedule.
//! - [`training`]: episode rollout, REINFORCE loss assembly and the joint
//!   training loop.
//! - [`synthetic`]: ground-truth synthetic datasets and the listening probe.
//! - [`eval`]: AUC, evaluation reports, baselines and trade-off curves.
//!
//! File formats, checkpoints and the command line live in the companion
//! `earlyclass` crate.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod classifier;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod math;
pub mod model;
pub mod nn;
pub mod policy;
pub mod series;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
pub use model::{ModelBundle, ModelConfig};
pub use series::{Dataset, IrregularSeries, NormStats, Observation};
