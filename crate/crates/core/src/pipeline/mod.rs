//! The RC-Mixup training loop and the baselines it is compared against.
//!
//! A round is one epoch over the current training subset. Warm-up rounds mix
//! the whole noisy set; afterwards every round selects a clean subset, mixes
//! within it and updates the model. Every `update_interval` loop iterations
//! each candidate bandwidth is tried for `lookahead` rounds from the same
//! snapshot, and the best-validating clone is kept.

mod config;
mod engine;
mod report;
mod steps;

pub use config::{DecayConfig, PipelineMode, RCConfig, RobustBackend, TrainerConfig};
pub use engine::{clean_validation_with_rt, run_pipeline, PipelineOutcome};
pub use report::{GridPoint, Phase, PipelineReport, RoundLog, TuneEvent};
pub use steps::{decay_bandwidth, pick_lowest, rc_round, tune_bandwidth, warmup_train, TuneOutcome};
