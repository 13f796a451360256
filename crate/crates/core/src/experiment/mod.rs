//! Config-driven experiments: flat TOML configs with per-dataset presets,
//! per-seed runs persisted as JSON reports, and comparison tables.

mod config;
mod preset;
mod report;
mod runner;
mod table;

pub use config::{DatasetKind, ExperimentConfig, MixupKind, NoiseChoice, RawConfig, ValidationMode};
pub use preset::Preset;
pub use report::{fingerprint, AggregateReport, RunReport, ValidationInfo, AGGREGATE_VERSION, REPORT_VERSION};
pub use runner::{load_pool, prepare, run_seed, tune_seed, PreparedData, TuneSummary};
pub use table::{load_reports, summarize, ComparisonRow, ComparisonTable, LoadedReports};
