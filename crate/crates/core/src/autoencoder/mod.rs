//! Per-dimension sparse autoencoder that maps word embeddings to synset
//! embeddings and back.

mod checkpoint;
mod fill;
mod objective;
mod system;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, write_loss_trace, write_model_checkpoint};
pub use fill::{fill_empty_synsets, FillReport, MAX_FILL_SWEEPS};
pub use objective::{
    compute_gradients, compute_loss, Gradients, LossParts, LossWeights, Objective,
};
pub use system::{
    column_normalize, decode_dimension, encode_dimension, init_systems, DimensionSystem,
    NEAR_ZERO_COLUMN_SUM,
};
pub use train::{
    train_all, train_dimension, train_dimension_observed, word_columns, IterationState, LossTrace,
    TrainedModel, TrainingConfig, DIVERGENCE_LIMIT,
};
