//! Physics-informed solver: a Bloch network `u(x, k)` (4 inputs, real and
//! imaginary outputs) and an energy network `E(k)`, trained jointly on the
//! residual of the k-dependent Schrödinger operator with normalization and
//! periodicity penalties.

mod checkpoint;
mod config;
mod infer;
mod loss;
pub mod mlp;
mod optim;
mod sampling;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION, MANIFEST_FILE, WEIGHTS_FILE};
pub use config::{default_translate_set, AdamConfig, TrainConfig};
pub use infer::{default_translates, nn_band_structure, nn_bloch_density, nn_bloch_grid, BAND_ASSIGNMENT};
pub use loss::{
    bloch_values, energy_values, loss_bc, loss_norm, loss_pde, param_gradients, pde_residual, spatial_jet,
    total_loss, Gradients, LossBreakdown, SpatialJet,
};
pub use mlp::{mlp_forward, MlpParams};
pub use optim::{adam_step, cosine_lr, AdamState};
pub use sampling::{sample_boundary, sample_k, sample_unit_cell, EpochSamples};
pub use train::{train, train_until, train_with, Init};
