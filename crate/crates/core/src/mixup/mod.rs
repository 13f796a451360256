//! Label-distance kernel mixing: partner sampling proportional to
//! `exp(-d(y_i, y_j) / b^2)` and the per-epoch augmentation pass.

mod distance;
mod epoch;
mod kernel;

pub use distance::{build_label_distances, build_label_distances_with, DistanceMatrix, LabelMetric};
pub use epoch::{cmixup_epoch, mix_pair, plain_epoch, MixConfig, MixMode, MixPlan, MixedSample};
pub use kernel::{sampling_probs, KernelCache, KernelSampler, KernelTable};
