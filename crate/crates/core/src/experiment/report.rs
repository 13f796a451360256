use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{NoiseRecord, Standardizer};
use crate::error::{Error, Result};
use crate::eval::{MetricResult, Summary};
use crate::experiment::{ExperimentConfig, ValidationMode};
use crate::matrix::Matrix;
use crate::nn::ModelSpec;
use crate::pipeline::PipelineReport;

pub const REPORT_VERSION: u32 = 1;
pub const AGGREGATE_VERSION: u32 = 1;

/// Short content hash: shapes and exact bit patterns of the matrices.
pub fn fingerprint(matrices: &[&Matrix]) -> String {
    let mut hasher = Sha256::new();
    for m in matrices {
        hasher.update((m.rows() as u64).to_le_bytes());
        hasher.update((m.cols() as u64).to_le_bytes());
        for v in m.as_slice() {
            hasher.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(&hasher.finalize()[..8])
}

pub(crate) fn fingerprint_text(text: &str) -> String {
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationInfo {
    pub mode: ValidationMode,
    /// Rows actually used for tuning and early stopping.
    pub size: usize,
    /// Rows of the noisy validation split kept by the cleaning run.
    pub kept: Option<Vec<usize>>,
    /// Fraction of validation rows whose clean/noisy status the cleaning run
    /// got right.
    pub detection_accuracy: Option<f64>,
}

/// Everything recorded about one seed of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub version: u32,
    pub name: String,
    pub dataset: String,
    pub method: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// Hash of the data pool; independent of the run seed.
    pub data_fingerprint: String,
    /// Hash of the noise and validation settings; independent of the run seed.
    pub noise_fingerprint: String,
    pub model: ModelSpec,
    pub standardizer: Standardizer,
    pub noise: NoiseRecord,
    pub validation: ValidationInfo,
    pub pipeline: PipelineReport,
    pub bandwidth_timeline: Vec<(usize, f64)>,
    pub detection_timeline: Vec<(usize, f64)>,
    pub detection_accuracy: Option<f64>,
    pub validation_metrics: Option<MetricResult>,
    pub test: MetricResult,
    pub wall_ms: f64,
}

fn unit(name: &str, v: Option<f64>, problems: &mut Vec<String>) {
    if let Some(v) = v {
        if !(0.0..=100.0).contains(&v) {
            problems.push(format!("{name} {v} outside [0, 100]"));
        }
    }
}

impl RunReport {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.version != REPORT_VERSION {
            problems.push(format!("version {} (expected {REPORT_VERSION})", self.version));
        }
        if !self.config.seeds.contains(&self.seed) {
            problems.push(format!("seed {} is not listed in the config", self.seed));
        }
        if self.test.n != self.config.test_size {
            problems.push(format!(
                "test metrics cover {} rows, config says {}",
                self.test.n, self.config.test_size
            ));
        }
        let non_negative = |v: f64| v >= 0.0;
        if !non_negative(self.test.rmse) || !non_negative(self.test.mape) {
            problems.push("test metrics must be non-negative numbers".into());
        }
        if self.pipeline.mode != self.config.mode {
            problems.push("pipeline mode differs from the config".into());
        }
        if self.pipeline.rounds > self.config.rc.max_rounds {
            problems.push(format!(
                "{} rounds exceed the budget of {}",
                self.pipeline.rounds, self.config.rc.max_rounds
            ));
        }
        if self.model.output_dim != self.config.label_dims {
            problems.push("model output width differs from label_dims".into());
        }
        if self.standardizer.mean.len() != self.model.input_dim || self.standardizer.scale.len() != self.model.input_dim
        {
            problems.push("standardizer width differs from the model input".into());
        }
        if let Err(e) = self
            .noise
            .validate(Some((self.config.train_size, self.config.label_dims)))
        {
            problems.push(e.to_string());
        }
        if self.validation.mode != self.config.validation {
            problems.push("validation mode differs from the config".into());
        }
        if self.validation.size == 0 || self.validation.size > self.config.validation_size {
            problems.push(format!("validation size {} is out of range", self.validation.size));
        }
        unit("detection accuracy", self.detection_accuracy, &mut problems);
        unit(
            "validation detection accuracy",
            self.validation.detection_accuracy,
            &mut problems,
        );
        for &(_, a) in &self.detection_timeline {
            unit("detection timeline entry", Some(a), &mut problems);
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Report(problems.join("; ")))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        report.validate()?;
        Ok(report)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn file_name(seed: u64) -> String {
        format!("seed_{seed}.json")
    }
}

/// Mean and standard deviation over the seeds of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateReport {
    pub version: u32,
    pub name: String,
    pub dataset: String,
    pub method: String,
    pub data_fingerprint: String,
    pub noise_fingerprint: String,
    pub seeds: Vec<u64>,
    pub rmse: Summary,
    pub mape: Summary,
    pub detection_accuracy: Option<Summary>,
    pub failed: Vec<(u64, String)>,
}

impl AggregateReport {
    pub const FILE_NAME: &'static str = "aggregate.json";

    pub fn from_runs(runs: &[RunReport], failed: Vec<(u64, String)>) -> Result<Self> {
        let first = runs.first().ok_or(Error::Empty("run reports"))?;
        if runs.iter().any(|r| {
            r.name != first.name
                || r.data_fingerprint != first.data_fingerprint
                || r.noise_fingerprint != first.noise_fingerprint
        }) {
            return Err(Error::Report("runs disagree on experiment or fingerprints".into()));
        }
        let rmse: Vec<f64> = runs.iter().map(|r| r.test.rmse).collect();
        let mape: Vec<f64> = runs.iter().map(|r| r.test.mape).collect();
        let detection: Option<Vec<f64>> = runs.iter().map(|r| r.detection_accuracy).collect();
        Ok(AggregateReport {
            version: AGGREGATE_VERSION,
            name: first.name.clone(),
            dataset: first.dataset.clone(),
            method: first.method.clone(),
            data_fingerprint: first.data_fingerprint.clone(),
            noise_fingerprint: first.noise_fingerprint.clone(),
            seeds: runs.iter().map(|r| r.seed).collect(),
            rmse: Summary::of(&rmse)?,
            mape: Summary::of(&mape)?,
            detection_accuracy: detection.map(|d| Summary::of(&d)).transpose()?,
            failed,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        if report.version != AGGREGATE_VERSION {
            return Err(Error::Report(format!("aggregate version {}", report.version)));
        }
        Ok(report)
    }
}
