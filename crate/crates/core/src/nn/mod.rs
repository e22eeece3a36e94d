//! Minimal LSTM + mixture-density network: forward pass, exact gradients,
//! Adam and an early-stopped training loop.

mod activation;
mod adam;
mod config;
mod network;
mod params;
mod train;

pub use activation::{activate, Activation};
pub use adam::{adam_step, AdamState};
pub use config::{AdamConfig, CellActivation, LossKind, NetworkConfig, TrainConfig};
pub use network::{
    backward, batch_loss, forward, loss_and_gradient, lstm_step, nll_loss, reg_nll_loss,
    sample_loss, LstmState, SIGMA_FLOOR,
};
pub use params::{glorot_uniform, NetworkParams, FORMAT_NAME, FORMAT_VERSION, INPUT_DIM};
pub use train::{
    train, train_best_of, BestOfSeeds, EarlyStopping, EpochRecord, SeedRun, StopDecision,
    TrainHistory, TrainedNetwork,
};
