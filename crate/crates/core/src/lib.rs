//! Robust regression training with label-distance mixup.
//!
//! The crate couples C-Mixup style augmentation (mixing partners drawn from a
//! Gaussian kernel over label distances) with multi-round robust training
//! back-ends that drop or refurbish suspected noisy labels between rounds.
//!
//! Layout:
//!
//! - [`nn`]: a small fully connected regressor with exact gradients and Adam.
//! - [`data`]: CSV and time-series ingestion, splits, synthetic generators and
//!   label-noise injection.
//! - [`mixup`]: label distances, the kernel sampler and the mixing pass.
//! - [`robust`]: trimmed-loss selection, cyclic-LR ranking and prediction-history
//!   refurbishment.
//! - [`pipeline`]: the interleaved clean/mix/update loop, bandwidth tuning and
//!   the baseline schedules.
//! - [`eval`]: RMSE, MAPE and seed aggregation.
//! - [`experiment`]: config files, run reports and comparison tables.

pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod matrix;
pub mod mixup;
pub mod nn;
pub mod pipeline;
pub mod robust;
mod util;

pub use error::{Error, Result};
pub use matrix::Matrix;
