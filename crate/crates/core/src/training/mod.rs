//! Objective, optimizer, training loop, checkpoints and gradient checks.

mod checkpoint;
mod config;
mod gradcheck;
mod loss;
mod trainer;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointManifest, FORMAT_VERSION, MAGIC};
pub use config::{init_params, TrainConfig, WeightInit};
pub use gradcheck::{
    check_gradients, gradient_check, relative_error, GradCheckReport, Probe, FD_STEP, REL_ERROR_FLOOR,
};
pub use loss::{bce_loss, bce_loss_with_grad, BCE_EPSILON};
pub use trainer::{batch_loss, loss_and_gradients, Adam, Trainer};
