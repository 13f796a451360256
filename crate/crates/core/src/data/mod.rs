//! Dataset ingestion, splitting, synthetic generators and label noise.

mod csv;
mod dataset;
mod noise;
mod split;
mod standardize;
mod surrogate;
mod synth;
mod timeseries;

pub use self::csv::{load_csv, parse_csv, write_csv};
pub use dataset::Dataset;
pub use noise::{inject_gaussian_noise, inject_label_flip, inject_noise, NoiseKind, NoiseRecord, NoiseSpec};
pub use split::{split_dataset, SplitSpec};
pub use standardize::Standardizer;
pub use surrogate::{airfoil_like, exchange_like, exchange_series, no2_like, spectrum_like};
pub use synth::{synth_regression, SynthTarget};
pub use timeseries::{load_series_csv, window_timeseries};
