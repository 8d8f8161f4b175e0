//! A small differentiable-network kernel: same-padded convolutions,
//! leaky-relu, a dense head, masked mean-square loss, Adam and a
//! finite-difference gradient check.

mod activation;
mod adam;
mod checkpoint;
mod conv;
mod dense;
mod gradcheck;
mod loss;
mod network;
mod volume;

use thiserror::Error;

pub use activation::{leaky_relu, leaky_relu_grad, leaky_relu_grad_volume, leaky_relu_volume, DEFAULT_LEAKY_ALPHA};
pub use adam::{AdamConfig, AdamState, Moments};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, FORMAT_VERSION, MAGIC};
pub use conv::{ConvGrad, ConvLayer};
pub use dense::{dot, DenseLayer};
pub use gradcheck::{grad_check, grad_check_full, kink_margin};
pub use loss::mse;
pub use network::{Architecture, ConvSpec, FeatureTrace, Gradients, Network, ParamId};
pub use volume::Volume;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub(crate) fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}
