//! The crossed autoencoder with measurement networks and its step-1 trainer.

mod checkpoint;
mod loss;
mod model;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint};
pub use loss::{msr_prediction_loss, msr_prediction_terms, msr_variance, output_variance, recon_loss};
pub use model::{
    Architecture, Direction, LatentBundle, LatentGroup, SpliceDims, SpliceModel, Standardization, Standardizer, View,
};
pub use train::{step1_train, GeoTerm, LossRecord, Step1Config, Step1Trainer, TrainReport};
