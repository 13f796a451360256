use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::Preset;
use crate::mixup::{LabelMetric, MixMode};
use crate::pipeline::{DecayConfig, PipelineMode, RCConfig, RobustBackend, TrainerConfig};
use crate::robust::{O2UConfig, SelfieConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Tabular CSV with labels in the trailing columns.
    Csv,
    /// CSV series (rows = time steps) cut into sliding windows.
    Timeseries,
    /// Noise-free smooth synthetic regression.
    Synthetic,
    AirfoilLike,
    No2Like,
    SpectrumLike,
    ExchangeLike,
}

impl DatasetKind {
    pub fn key(self) -> &'static str {
        match self {
            DatasetKind::Csv => "csv",
            DatasetKind::Timeseries => "timeseries",
            DatasetKind::Synthetic => "synthetic",
            DatasetKind::AirfoilLike => "airfoil_like",
            DatasetKind::No2Like => "no2_like",
            DatasetKind::SpectrumLike => "spectrum_like",
            DatasetKind::ExchangeLike => "exchange_like",
        }
    }

    pub fn is_windowed(self) -> bool {
        matches!(self, DatasetKind::Timeseries | DatasetKind::ExchangeLike)
    }

    fn reads_file(self) -> bool {
        matches!(self, DatasetKind::Csv | DatasetKind::Timeseries)
    }

    /// Label width fixed by the generator, if any.
    fn fixed_label_dims(self) -> Option<usize> {
        match self {
            DatasetKind::AirfoilLike | DatasetKind::No2Like => Some(1),
            DatasetKind::SpectrumLike => Some(4),
            DatasetKind::ExchangeLike => Some(8),
            _ => None,
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixupKind {
    Mixup,
    Manimix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseChoice {
    None,
    Gaussian,
    LabelFlip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    /// The validation split as drawn.
    Clean,
    /// Validation labels corrupted like the training labels.
    Noisy,
    /// Noisy validation labels, then cleaned by a robust-only run.
    CleanedRt,
}

impl ValidationMode {
    pub fn key(self) -> &'static str {
        match self {
            ValidationMode::Clean => "clean",
            ValidationMode::Noisy => "noisy",
            ValidationMode::CleanedRt => "cleaned_rt",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BackendKind {
    Itlm,
    O2u,
    Selfie,
}

/// The config file as written: every key optional, unknown keys rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_dims: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_features: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_labels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_seed: Option<u64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_size: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_magnitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_tau: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<PipelineMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    backend: Option<BackendKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub o2u_pretrain_rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub o2u_cycle_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub o2u_cycles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub o2u_lr_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub o2u_lr_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selfie_history: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selfie_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selfie_percentile: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidths: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub update_interval: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lookahead: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warmup_rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_improvement: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_metric: Option<LabelMetric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restore_best: Option<bool>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixup: Option<MixupKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mix_layer: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_dims: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub preset: Option<Preset>,
    pub dataset: DatasetKind,
    pub data_path: Option<PathBuf>,
    pub label_dims: usize,
    pub window: Option<usize>,
    pub horizon: Option<usize>,
    pub synthetic_features: Option<usize>,
    pub data_seed: u64,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub noise: NoiseChoice,
    pub noise_rate: f64,
    pub noise_magnitude: f64,
    pub validation: ValidationMode,
    pub validation_tau: f64,
    pub mode: PipelineMode,
    pub backend: RobustBackend,
    pub rc: RCConfig,
    pub trainer: TrainerConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

fn require<T>(value: Option<T>, key: &str, problems: &mut Vec<String>) -> Option<T> {
    if value.is_none() {
        problems.push(format!("missing `{key}` (no preset supplies it)"));
    }
    value
}

impl ExperimentConfig {
    /// Parses config text. Relative `data_path`s are taken relative to `base`.
    pub fn from_toml_str(text: &str, base: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let mut config = Self::resolve(raw)?;
        if let (Some(base), Some(path)) = (base, config.data_path.as_mut()) {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path.parent())
    }

    /// Fills preset defaults and checks everything, reporting every problem.
    pub fn resolve(raw: RawConfig) -> Result<Self> {
        let mut problems = Vec::new();
        let pv = raw.preset.map(Preset::values);
        let p = pv.as_ref();

        let dataset = require(raw.dataset.or(p.map(|v| v.dataset)), "dataset", &mut problems);
        let label_dims = raw
            .label_dims
            .or(dataset.and_then(DatasetKind::fixed_label_dims))
            .or(p.map(|v| v.label_dims))
            .unwrap_or(1);
        if let Some(fixed) = dataset.and_then(DatasetKind::fixed_label_dims) {
            if label_dims != fixed {
                problems.push(format!("dataset {} always has {fixed} label columns", dataset.unwrap()));
            }
        }
        if label_dims == 0 {
            problems.push("label_dims must be at least 1".into());
        }
        let windowed = dataset.is_some_and(DatasetKind::is_windowed);
        let window = raw.window.or(if windowed { p.and_then(|v| v.window) } else { None });
        let horizon = raw.horizon.or(if windowed { p.and_then(|v| v.horizon) } else { None });
        if windowed {
            if window.is_none_or(|w| w == 0) || horizon.is_none_or(|h| h == 0) {
                problems.push("windowed datasets need positive `window` and `horizon`".into());
            }
        } else if raw.window.is_some() || raw.horizon.is_some() {
            problems.push("`window`/`horizon` only apply to windowed datasets".into());
        }
        if let Some(kind) = dataset {
            if kind.reads_file() && raw.data_path.is_none() {
                problems.push(format!("dataset {kind} needs `data_path`"));
            }
            if !kind.reads_file() && raw.data_path.is_some() {
                problems.push(format!("`data_path` is not used by dataset {kind}"));
            }
        }
        let synthetic = dataset == Some(DatasetKind::Synthetic);
        if synthetic {
            if raw.synthetic_features.is_none_or(|d| d == 0) {
                problems.push("synthetic datasets need a positive `synthetic_features`".into());
            }
            if raw.synthetic_labels.is_some_and(|e| e != label_dims) {
                problems.push("`synthetic_labels` disagrees with `label_dims`".into());
            }
        } else if raw.synthetic_features.is_some() || raw.synthetic_labels.is_some() {
            problems.push("`synthetic_*` keys only apply to the synthetic dataset".into());
        }

        let train_size = require(raw.train_size.or(p.map(|v| v.train_size)), "train_size", &mut problems);
        let validation_size = require(
            raw.validation_size.or(p.map(|v| v.validation_size)),
            "validation_size",
            &mut problems,
        );
        let test_size = require(raw.test_size.or(p.map(|v| v.test_size)), "test_size", &mut problems);
        for (key, v) in [
            ("train_size", train_size),
            ("validation_size", validation_size),
            ("test_size", test_size),
        ] {
            if v == Some(0) {
                problems.push(format!("`{key}` must be at least 1"));
            }
        }

        let total = [train_size, validation_size, test_size, window, horizon]
            .iter()
            .try_fold(0usize, |acc, v| acc.checked_add(v.unwrap_or(0)));
        if total.is_none_or(|t| t > u32::MAX as usize) {
            problems.push("split sizes, window and horizon together are implausibly large".into());
        }

        let noise = raw.noise.unwrap_or(NoiseChoice::Gaussian);
        let noise_rate = raw
            .noise_rate
            .unwrap_or(if noise == NoiseChoice::None { 0.0 } else { 0.3 });
        let noise_magnitude = raw.noise_magnitude.or(p.map(|v| v.noise_magnitude)).unwrap_or(2.0);
        if !(0.0..=0.5).contains(&noise_rate) {
            problems.push(format!("noise_rate {noise_rate} must lie in [0, 0.5]"));
        }
        if noise == NoiseChoice::None && noise_rate != 0.0 {
            problems.push("noise_rate must be 0 when noise = \"none\"".into());
        }
        if !(noise_magnitude >= 0.0 && noise_magnitude.is_finite()) {
            problems.push(format!("noise_magnitude {noise_magnitude} must be non-negative"));
        }

        let mode = raw.mode.unwrap_or(PipelineMode::Rcmixup);
        let tau = raw.tau.unwrap_or(0.7);
        let validation = raw.validation.unwrap_or(ValidationMode::Clean);
        let validation_tau = raw.validation_tau.unwrap_or(tau);
        if !(validation_tau > 0.0 && validation_tau <= 1.0) {
            problems.push(format!("validation_tau {validation_tau} must lie in (0, 1]"));
        }

        let backend_kind = raw.backend.unwrap_or(BackendKind::Itlm);
        let o2u_keys = [
            raw.o2u_pretrain_rounds.is_some(),
            raw.o2u_cycle_length.is_some(),
            raw.o2u_cycles.is_some(),
            raw.o2u_lr_max.is_some(),
            raw.o2u_lr_min.is_some(),
        ];
        let selfie_keys = [
            raw.selfie_history.is_some(),
            raw.selfie_threshold.is_some(),
            raw.selfie_percentile.is_some(),
        ];
        if backend_kind != BackendKind::O2u && o2u_keys.contains(&true) {
            problems.push("`o2u_*` keys need backend = \"o2u\"".into());
        }
        if backend_kind != BackendKind::Selfie && selfie_keys.contains(&true) {
            problems.push("`selfie_*` keys need backend = \"selfie\"".into());
        }
        let backend = match backend_kind {
            BackendKind::Itlm => RobustBackend::Itlm,
            BackendKind::O2u => {
                let d = O2UConfig::default();
                RobustBackend::O2u(O2UConfig {
                    pretrain_rounds: raw.o2u_pretrain_rounds.unwrap_or(d.pretrain_rounds),
                    cycle_length: raw.o2u_cycle_length.unwrap_or(d.cycle_length),
                    cycles: raw.o2u_cycles.unwrap_or(d.cycles),
                    lr_max: raw.o2u_lr_max.unwrap_or(d.lr_max),
                    lr_min: raw.o2u_lr_min.unwrap_or(d.lr_min),
                })
            }
            BackendKind::Selfie => {
                let d = SelfieConfig::default();
                RobustBackend::Selfie(SelfieConfig {
                    history: raw.selfie_history.unwrap_or(d.history),
                    threshold: raw.selfie_threshold.or(d.threshold),
                    percentile: raw.selfie_percentile.unwrap_or(d.percentile),
                })
            }
        };
        if let Err(e) = backend.validate() {
            problems.push(e.to_string());
        }

        let rc = RCConfig {
            bandwidths: require(
                raw.bandwidths.clone().or(p.map(|v| v.bandwidths.to_vec())),
                "bandwidths",
                &mut problems,
            )
            .unwrap_or_default(),
            update_interval: require(
                raw.update_interval.or(p.map(|v| v.update_interval)),
                "update_interval",
                &mut problems,
            )
            .unwrap_or(1),
            lookahead: require(raw.lookahead.or(p.map(|v| v.lookahead)), "lookahead", &mut problems).unwrap_or(1),
            tau,
            alpha: require(raw.alpha.or(p.map(|v| v.alpha)), "alpha", &mut problems).unwrap_or(1.0),
            initial_bandwidth: require(
                raw.initial_bandwidth.or(p.map(|v| v.initial_bandwidth)),
                "initial_bandwidth",
                &mut problems,
            )
            .unwrap_or(1.0),
            warmup_rounds: raw.warmup_rounds,
            max_rounds: require(raw.max_epochs.or(p.map(|v| v.max_epochs)), "max_epochs", &mut problems).unwrap_or(1),
            patience: raw.patience.unwrap_or(50),
            min_improvement: raw.min_improvement.unwrap_or(1e-4),
            decay: DecayConfig {
                enabled: mode == PipelineMode::RcmixupDecay,
                rate: raw.decay_rate.unwrap_or(0.1),
            },
            metric: raw.label_metric.unwrap_or_default(),
            restore_best: raw.restore_best.unwrap_or(true),
        };
        problems.extend(rc.problems());

        let hidden_dims = raw.hidden_dims.clone().unwrap_or_else(|| vec![128]);
        let mixup = raw.mixup.or(p.map(|v| v.mixup)).unwrap_or(MixupKind::Mixup);
        let mix_mode = match mixup {
            MixupKind::Mixup => {
                if raw.mix_layer.is_some() {
                    problems.push("`mix_layer` needs mixup = \"manimix\"".into());
                }
                MixMode::Input
            }
            MixupKind::Manimix => MixMode::Manifold {
                layer: raw.mix_layer.unwrap_or(1),
            },
        };
        let trainer = TrainerConfig {
            hidden_dims,
            learning_rate: require(
                raw.learning_rate.or(p.map(|v| v.learning_rate)),
                "learning_rate",
                &mut problems,
            )
            .unwrap_or(1e-3),
            batch_size: require(raw.batch_size.or(p.map(|v| v.batch_size)), "batch_size", &mut problems).unwrap_or(1),
            mix_mode,
        };
        problems.extend(trainer.problems());

        let seeds = raw.seeds.clone().unwrap_or_else(|| vec![0, 1, 2, 3, 4]);
        if seeds.is_empty() {
            problems.push("`seeds` must not be empty".into());
        }
        if seeds.iter().collect::<HashSet<_>>().len() != seeds.len() {
            problems.push("`seeds` contains duplicates".into());
        }

        if !problems.is_empty() {
            return Err(Error::Config(problems.join("\n")));
        }
        let dataset = dataset.expect("checked");
        let name = raw.name.clone().unwrap_or_else(|| {
            let data = raw
                .preset
                .map(|p| p.key().to_string())
                .unwrap_or_else(|| dataset.key().to_string());
            format!("{data}-{}-{}", mode.key(), backend.key())
        });
        Ok(ExperimentConfig {
            name,
            preset: raw.preset,
            dataset,
            data_path: raw.data_path,
            label_dims,
            window: if windowed { window } else { None },
            horizon: if windowed { horizon } else { None },
            synthetic_features: raw.synthetic_features,
            data_seed: raw.data_seed.unwrap_or(0),
            train_size: train_size.expect("checked"),
            validation_size: validation_size.expect("checked"),
            test_size: test_size.expect("checked"),
            noise,
            noise_rate,
            noise_magnitude,
            validation,
            validation_tau,
            mode,
            backend,
            rc,
            trainer,
            seeds,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("runs")),
        })
    }

    /// Every setting spelled out, so the text no longer depends on presets.
    pub fn to_raw(&self) -> RawConfig {
        let (backend, o2u, selfie) = match self.backend {
            RobustBackend::Itlm => (BackendKind::Itlm, None, None),
            RobustBackend::O2u(c) => (BackendKind::O2u, Some(c), None),
            RobustBackend::Selfie(c) => (BackendKind::Selfie, None, Some(c)),
        };
        let (mixup, mix_layer) = match self.trainer.mix_mode {
            MixMode::Input => (MixupKind::Mixup, None),
            MixMode::Manifold { layer } => (MixupKind::Manimix, Some(layer)),
        };
        RawConfig {
            name: Some(self.name.clone()),
            preset: self.preset,
            dataset: Some(self.dataset),
            data_path: self.data_path.clone(),
            label_dims: Some(self.label_dims),
            window: self.window,
            horizon: self.horizon,
            synthetic_features: self.synthetic_features,
            synthetic_labels: None,
            data_seed: Some(self.data_seed),
            train_size: Some(self.train_size),
            validation_size: Some(self.validation_size),
            test_size: Some(self.test_size),
            noise: Some(self.noise),
            noise_rate: Some(self.noise_rate),
            noise_magnitude: Some(self.noise_magnitude),
            validation: Some(self.validation),
            validation_tau: Some(self.validation_tau),
            mode: Some(self.mode),
            backend: Some(backend),
            o2u_pretrain_rounds: o2u.map(|c| c.pretrain_rounds),
            o2u_cycle_length: o2u.map(|c| c.cycle_length),
            o2u_cycles: o2u.map(|c| c.cycles),
            o2u_lr_max: o2u.map(|c| c.lr_max),
            o2u_lr_min: o2u.map(|c| c.lr_min),
            selfie_history: selfie.map(|c| c.history),
            selfie_threshold: selfie.and_then(|c| c.threshold),
            selfie_percentile: selfie.map(|c| c.percentile),
            bandwidths: Some(self.rc.bandwidths.clone()),
            initial_bandwidth: Some(self.rc.initial_bandwidth),
            update_interval: Some(self.rc.update_interval),
            lookahead: Some(self.rc.lookahead),
            tau: Some(self.rc.tau),
            alpha: Some(self.rc.alpha),
            warmup_rounds: self.rc.warmup_rounds,
            max_epochs: Some(self.rc.max_rounds),
            patience: Some(self.rc.patience),
            min_improvement: Some(self.rc.min_improvement),
            decay_rate: Some(self.rc.decay.rate),
            label_metric: Some(self.rc.metric),
            restore_best: Some(self.rc.restore_best),
            mixup: Some(mixup),
            mix_layer,
            hidden_dims: Some(self.trainer.hidden_dims.clone()),
            learning_rate: Some(self.trainer.learning_rate),
            batch_size: Some(self.trainer.batch_size),
            seeds: Some(self.seeds.clone()),
            output_dir: Some(self.output_dir.clone()),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.to_raw()).map_err(|e| Error::Config(e.to_string()))
    }

    /// Grouping key for comparison tables.
    pub fn dataset_label(&self) -> String {
        match self.preset {
            Some(p) => p.key().to_string(),
            None => self.dataset.key().to_string(),
        }
    }

    /// Method name as printed in comparison tables.
    pub fn method_label(&self) -> String {
        let mut label = self.mode.label().to_string();
        match self.backend {
            RobustBackend::Itlm => {}
            RobustBackend::O2u(_) => label.push_str(" w/ O2U"),
            RobustBackend::Selfie(_) => label.push_str(" w/ SELFIE"),
        }
        if self.validation != ValidationMode::Clean {
            label.push_str(&format!(" [val: {}]", self.validation.key()));
        }
        label
    }
}
