//! The learned detector: a dense-residual MLP that maps the real-split
//! received signal to a probability per device, trained with cross-entropy
//! against the uniform distribution over the active set.

mod adam;
mod backward;
mod checkpoint;
mod ensemble;
mod forward;
mod layers;
mod params;
mod scalar;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use backward::backward;
pub use checkpoint::{
    checkpoint_bytes, checkpoint_from_bytes, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use ensemble::ensemble_predict;
pub use forward::{forward, predict, Dropout, ForwardCache, Mode};
pub use layers::{
    apply_dropout, batch_cross_entropy, batch_norm_eval, batch_norm_train, cross_entropy_loss, dropout, dropout_mask,
    kl_divergence, relu, select_support, softmax_rows, BnBatch, BN_EPSILON, LOG_CLAMP,
};
pub use params::{Activation, BatchNorm, Dense, HiddenLayer, NetworkParams, NetworkShape};
pub use scalar::Scalar;
pub use train::{evaluate_loss, finalize_batch_norm, stack_inputs, train, train_step, LossPoint, TrainConfig, TrainReport};
