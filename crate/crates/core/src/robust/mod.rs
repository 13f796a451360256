//! Multi-round robust training back-ends that pick a clean subset of a noisy
//! training set.

mod detection;
mod itlm;
mod o2u;
mod selfie;

pub use detection::detection_accuracy;
pub use itlm::{itlm_select, CleanSelection};
pub use o2u::{cyclic_lr, o2u_rank, O2UConfig};
pub use selfie::{selfie_step, SelfieConfig, SelfieState, SelfieStep};
