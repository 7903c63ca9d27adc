//! GRU encoder/decoder VAE over fragment-id sequences.

mod adam;
mod checkpoint;
mod gru;
mod model;
mod params;
mod train;

use thiserror::Error;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, CheckpointError};
pub use gru::{gru_backward, gru_cell, gru_forward, GruCache};
pub use model::{
    check_sequence, decode_step, decode_step_batch, encode, kl_loss, log_softmax, loss_and_grad,
    reparameterize, sequence_nll, total_loss, BatchLoss, DecoderState, Dropout,
};
pub use params::{GruLayerParams, ModelDims, ModelParameters};
pub use train::{train, EpochMetrics, EpochRecord, TrainConfig, TrainOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("token id {id} outside vocabulary of size {vocab_size}")]
    BadId { id: u32, vocab_size: usize },
    #[error("sequence must be SOS, at least one fragment, EOS: {0:?}")]
    Framing(Vec<u32>),
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty sequence")]
    EmptySequence,
    #[error("loss became non-finite ({0})")]
    NonFinite(f64),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("epoch callback failed: {0}")]
    Callback(String),
}
