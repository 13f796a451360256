//! Fully connected regression networks trained with Adam.
//!
//! Parameters live in one flat buffer so that optimizer state, gradients and
//! finite-difference checks can treat them uniformly. Hidden layers use ReLU;
//! the output layer is linear.

mod adam;
mod backprop;
mod model;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use backprop::{batch_loss, gradient, Example, HiddenMix};
pub use model::{init_params, Activation, ForwardTrace, ModelSpec, Params};
pub(crate) use train::row_losses;
pub use train::{epoch_batches, per_sample_losses, predict, TrainState, TrainingSet};
