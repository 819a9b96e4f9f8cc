//! Disentangling shared and private latent variables of two paired views.
//!
//! The crate is organised around the two training stages:
//!
//! * [`splice`]: the crossed autoencoder with measurement networks and the
//!   alternating step-1 trainer.
//! * [`geometry`]: submanifold projection, k-NN graphs, landmark geodesics
//!   and the geometry-preserving retraining stage.
//!
//! Supporting modules: [`nncore`] (dense networks, backprop and Adam),
//! [`datagen`] (simulators and dataset I/O), [`baselines`] (RRR, CCA and a
//! linear classifier) and [`metrics`].
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the default 64-bit precision used throughout the pipeline.

pub mod baselines;
pub mod datagen;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod nncore;
pub mod scalar;
pub mod splice;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Row-major 64-bit matrix; samples are rows.
pub type Mat = nncore::Matrix<f64>;
/// 64-bit dense network.
pub type Mlp = nncore::Network<f64>;
/// 64-bit Adam optimizer state.
pub type AdamState = nncore::AdamState<f64>;
/// 64-bit crossed autoencoder.
pub type SpliceModel = splice::SpliceModel<f64>;
/// 64-bit encoded latents.
pub type LatentBundle = splice::LatentBundle<f64>;
/// 64-bit landmark geodesic table.
pub type GeodesicTable = geometry::GeodesicTable<f64>;
/// 64-bit neighbor graph.
pub type NeighborGraph = geometry::NeighborGraph<f64>;

/// Single-precision aliases.
pub mod f32 {
    pub type Mat = crate::nncore::Matrix<f32>;
    pub type Mlp = crate::nncore::Network<f32>;
    pub type AdamState = crate::nncore::AdamState<f32>;
    pub type SpliceModel = crate::splice::SpliceModel<f32>;
    pub type LatentBundle = crate::splice::LatentBundle<f32>;
    pub type GeodesicTable = crate::geometry::GeodesicTable<f32>;
    pub type NeighborGraph = crate::geometry::NeighborGraph<f32>;
}
