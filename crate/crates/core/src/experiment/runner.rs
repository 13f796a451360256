use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{
    airfoil_like, exchange_series, inject_noise, load_csv, load_series_csv, no2_like, spectrum_like, split_dataset,
    synth_regression, window_timeseries, Dataset, NoiseKind, NoiseRecord, NoiseSpec, SplitSpec, Standardizer,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, MetricResult};
use crate::experiment::report::fingerprint_text;
use crate::experiment::{
    fingerprint, DatasetKind, ExperimentConfig, NoiseChoice, Preset, RunReport, ValidationInfo, ValidationMode,
    REPORT_VERSION,
};
use crate::nn::predict;
use crate::pipeline::{clean_validation_with_rt, run_pipeline, GridPoint, PipelineMode};
use crate::robust::detection_accuracy;
use crate::util::mix_seed;

/// Directory of real dataset files that replace the synthetic stand-ins of
/// the presets (`airfoil.csv`, `no2.csv`, `spectrum.csv`, `exchange_rate.csv`).
pub const DATA_DIR_ENV: &str = "RCMIXUP_DATA_DIR";

const STREAM_SPLIT: u64 = 10;
const STREAM_TRAIN_NOISE: u64 = 11;
const STREAM_VAL_NOISE: u64 = 12;
const STREAM_VAL_CLEAN: u64 = 13;

fn real_file(config: &ExperimentConfig) -> Option<PathBuf> {
    let preset = config.preset?;
    if matches!(config.dataset, DatasetKind::Csv | DatasetKind::Timeseries) {
        return None;
    }
    let path = PathBuf::from(std::env::var_os(DATA_DIR_ENV)?).join(format!("{}.csv", preset.key()));
    path.is_file().then_some(path)
}

/// The full row pool before splitting. Depends on the data seed only, so
/// every run seed of an experiment sees the same pool.
pub fn load_pool(config: &ExperimentConfig) -> Result<Dataset> {
    let total = config.train_size + config.validation_size + config.test_size;
    let seed = config.data_seed;
    let windows = || Ok::<_, Error>((config.window.unwrap_or(1), config.horizon.unwrap_or(1)));
    if let Some(path) = real_file(config) {
        return if config.preset == Some(Preset::ExchangeRate) {
            let (w, h) = windows()?;
            window_timeseries(&load_series_csv(&path)?, w, h)
        } else {
            load_csv(&path, config.label_dims)
        };
    }
    let pool = match config.dataset {
        DatasetKind::Csv => load_csv(
            config.data_path.as_ref().ok_or(Error::Empty("data_path"))?,
            config.label_dims,
        )?,
        DatasetKind::Timeseries => {
            let (w, h) = windows()?;
            let series = load_series_csv(config.data_path.as_ref().ok_or(Error::Empty("data_path"))?)?;
            if series.cols() != config.label_dims {
                return Err(Error::DimensionMismatch {
                    context: "series channels vs label_dims",
                    expected: config.label_dims,
                    got: series.cols(),
                });
            }
            window_timeseries(&series, w, h)?
        }
        DatasetKind::Synthetic => {
            let d = config.synthetic_features.ok_or(Error::Empty("synthetic_features"))?;
            synth_regression(total, d, config.label_dims, seed)?.0
        }
        DatasetKind::AirfoilLike => airfoil_like(total, seed)?,
        DatasetKind::No2Like => no2_like(total, seed)?,
        DatasetKind::SpectrumLike => spectrum_like(total, seed)?,
        DatasetKind::ExchangeLike => {
            let (w, h) = windows()?;
            let series = exchange_series(total + w + h - 1, seed)?;
            window_timeseries(&series, w, h)?
        }
    };
    Ok(pool)
}

/// One seed's view of the data: standardized splits, the noisy training
/// set, and whichever validation set drives tuning.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub clean_train: Dataset,
    pub train: Dataset,
    /// The noisy training set with its original, unstandardized features.
    pub raw_train: Dataset,
    pub noise: NoiseRecord,
    pub validation: Dataset,
    pub validation_info: ValidationInfo,
    pub test: Dataset,
    pub standardizer: Standardizer,
    pub data_fingerprint: String,
    pub noise_fingerprint: String,
}

fn noise_spec(config: &ExperimentConfig, seed: u64) -> NoiseSpec {
    match config.noise {
        NoiseChoice::None => NoiseSpec {
            kind: NoiseKind::Gaussian,
            rate: 0.0,
            magnitude: 0.0,
            seed,
        },
        NoiseChoice::Gaussian | NoiseChoice::LabelFlip => NoiseSpec {
            kind: if config.noise == NoiseChoice::Gaussian {
                NoiseKind::Gaussian
            } else {
                NoiseKind::LabelFlip
            },
            rate: config.noise_rate,
            magnitude: config.noise_magnitude,
            seed,
        },
    }
}

/// Splits, standardizes and corrupts the pool for one run seed. Windowed
/// series split chronologically; everything else by a seeded shuffle.
pub fn prepare(config: &ExperimentConfig, pool: &Dataset, seed: u64) -> Result<PreparedData> {
    if pool.label_dim() != config.label_dims {
        return Err(Error::DimensionMismatch {
            context: "dataset label columns vs label_dims",
            expected: config.label_dims,
            got: pool.label_dim(),
        });
    }
    let (tr, va, te) = (config.train_size, config.validation_size, config.test_size);
    let (train, validation, test) = if config.dataset.is_windowed() {
        if tr + va + te > pool.len() {
            return Err(Error::Oversubscribed {
                requested: tr + va + te,
                available: pool.len(),
            });
        }
        let rows = |a: usize, b: usize| (a..b).collect::<Vec<_>>();
        (
            pool.subset(&rows(0, tr))?,
            pool.subset(&rows(tr, tr + va))?,
            pool.subset(&rows(tr + va, tr + va + te))?,
        )
    } else {
        let spec = SplitSpec {
            train: tr,
            validation: va,
            test: te,
            seed: mix_seed(seed, STREAM_SPLIT, 0),
        };
        split_dataset(pool, &spec)?
    };
    let standardizer = Standardizer::fit(&train.x)?;
    let scale = |d: &Dataset| -> Result<Dataset> {
        let mut out = d.clone();
        out.x = standardizer.transform(&d.x)?;
        Ok(out)
    };
    let (clean_train, clean_validation, test) = (scale(&train)?, scale(&validation)?, scale(&test)?);
    let raw_split = train;
    let (train, noise) = inject_noise(&clean_train, &noise_spec(config, mix_seed(seed, STREAM_TRAIN_NOISE, 0)))?;
    let raw_train = raw_split.with_labels(train.y.clone())?;

    let (validation, validation_info) = match config.validation {
        ValidationMode::Clean => {
            let info = ValidationInfo {
                mode: ValidationMode::Clean,
                size: clean_validation.len(),
                kept: None,
                detection_accuracy: None,
            };
            (clean_validation, info)
        }
        mode => {
            let spec = noise_spec(config, mix_seed(seed, STREAM_VAL_NOISE, 0));
            let (noisy, record) = inject_noise(&clean_validation, &spec)?;
            if mode == ValidationMode::Noisy {
                let info = ValidationInfo {
                    mode,
                    size: noisy.len(),
                    kept: None,
                    detection_accuracy: None,
                };
                (noisy, info)
            } else {
                let (cleaned, selection) = clean_validation_with_rt(
                    &noisy,
                    config.validation_tau,
                    &config.rc,
                    &config.trainer,
                    mix_seed(seed, STREAM_VAL_CLEAN, 0),
                )?;
                let info = ValidationInfo {
                    mode,
                    size: cleaned.len(),
                    detection_accuracy: detection_accuracy(&selection, &record),
                    kept: Some(selection.indices),
                };
                (cleaned, info)
            }
        }
    };

    let pool_hash = fingerprint(&[&pool.x, &pool.y]);
    let data_fingerprint = fingerprint_text(&format!("{pool_hash}|{tr}|{va}|{te}|{}", config.dataset.is_windowed()));
    let noise_fingerprint = fingerprint_text(&format!(
        "{:?}|{}|{}",
        config.noise, config.noise_rate, config.noise_magnitude
    ));
    Ok(PreparedData {
        clean_train,
        train,
        raw_train,
        noise,
        validation,
        validation_info,
        test,
        standardizer,
        data_fingerprint,
        noise_fingerprint,
    })
}

/// Runs the configured pipeline for one seed and scores it on the test split.
pub fn run_seed(config: &ExperimentConfig, pool: &Dataset, seed: u64) -> Result<RunReport> {
    let started = Instant::now();
    let data = prepare(config, pool, seed)?;
    let outcome = run_pipeline(
        config.mode,
        &config.rc,
        &config.trainer,
        &config.backend,
        &data.train,
        Some(&data.validation),
        Some(&data.noise),
        seed,
    )?;
    let params = &outcome.state.params;
    let test = evaluate(&data.test.y, &predict(params, &data.test.x)?)?;
    let validation_metrics = Some(evaluate(&data.validation.y, &predict(params, &data.validation.x)?)?);
    let report = outcome.report;
    let mut config_echo = config.clone();
    if !config_echo.seeds.contains(&seed) {
        config_echo.seeds = vec![seed];
    }
    let run = RunReport {
        version: REPORT_VERSION,
        name: config.name.clone(),
        dataset: config.dataset_label(),
        method: config.method_label(),
        seed,
        config: config_echo,
        data_fingerprint: data.data_fingerprint,
        noise_fingerprint: data.noise_fingerprint,
        model: params.spec().clone(),
        standardizer: data.standardizer,
        noise: data.noise,
        validation: data.validation_info,
        bandwidth_timeline: report.bandwidth_timeline(),
        detection_timeline: report.detection_timeline(),
        detection_accuracy: report.final_detection_accuracy(),
        pipeline: report,
        validation_metrics,
        test,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    run.validate()?;
    Ok(run)
}

/// Result of a bandwidth grid search for one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneSummary {
    pub seed: u64,
    pub mode: PipelineMode,
    pub grid: Vec<GridPoint>,
    pub chosen_bandwidth: f64,
    pub test: MetricResult,
}

impl TuneSummary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Grid search over the configured bandwidths. Modes without a grid fall
/// back to plain C-Mixup.
pub fn tune_seed(config: &ExperimentConfig, pool: &Dataset, seed: u64) -> Result<TuneSummary> {
    let mode = if config.mode.grid_searched() {
        config.mode
    } else {
        PipelineMode::CmixupOnly
    };
    let data = prepare(config, pool, seed)?;
    let outcome = run_pipeline(
        mode,
        &config.rc,
        &config.trainer,
        &config.backend,
        &data.train,
        Some(&data.validation),
        Some(&data.noise),
        seed,
    )?;
    let test = evaluate(&data.test.y, &predict(&outcome.state.params, &data.test.x)?)?;
    let chosen_bandwidth = outcome
        .report
        .chosen_bandwidth
        .ok_or_else(|| Error::Report(format!("mode {mode} produced no bandwidth")))?;
    Ok(TuneSummary {
        seed,
        mode,
        grid: outcome.report.grid,
        chosen_bandwidth,
        test,
    })
}
