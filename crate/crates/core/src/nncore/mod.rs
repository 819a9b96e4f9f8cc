//! Dense networks: matrices, multilayer perceptrons with explicit
//! backpropagation, and Adam with a linearly decaying learning rate.

mod adam;
pub mod gradcheck;
mod matrix;
mod mlp;
pub mod rng;

pub use adam::{AdamConfig, AdamState};
pub use matrix::{euclidean, sq_distances, Matrix};
pub use mlp::{Activation, Gradients, Layer, LayerGrad, Network};
