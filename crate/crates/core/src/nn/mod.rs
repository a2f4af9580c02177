//! Differentiable building blocks shared by the fixed architectures in this
//! crate. There is no tape-based autodiff: every module owns a hand-written
//! backward pass, and [`gradcheck`] verifies each one numerically.

mod adam;
pub mod gradcheck;
mod matrix;
mod ops;
mod rng;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{finite_diff_check, GradCheckReport};
pub use matrix::{Matrix, ParamMatrix, Parameterized};
pub use ops::{
    cross_entropy, cross_entropy_logits_grad, linear, linear_backward, log_softmax, relu, sigmoid,
    softmax, softmax_backward, tanh,
};
pub use rng::Rng;
