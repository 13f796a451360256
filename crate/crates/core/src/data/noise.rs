use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::util::floor_count;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Additive `N(0, m^2 sigma_k^2)` per label dimension.
    Gaussian,
    /// `y_k -> max_k - y_k` on every label dimension.
    LabelFlip,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub rate: f64,
    /// Gaussian only.
    pub magnitude: f64,
    pub seed: u64,
}

/// Ground truth of an injection: which rows were corrupted (row positions in
/// the corrupted dataset, ascending) and what their labels were before.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseRecord {
    pub kind: NoiseKind,
    pub rate: f64,
    pub magnitude: f64,
    pub indices: Vec<usize>,
    pub original_labels: Vec<Vec<f64>>,
    /// Per-dimension label standard deviation used for the Gaussian scale.
    pub sigma: Option<Vec<f64>>,
    /// Per-dimension label maximum used for flipping.
    pub max: Option<Vec<f64>>,
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&rate) {
        return Err(Error::NoiseRate(rate));
    }
    Ok(())
}

fn choose_rows(n: usize, rate: f64, seed: u64) -> (Vec<usize>, StdRng) {
    let mut rng = StdRng::seed_from_u64(seed);
    let count = floor_count(rate, n);
    let mut rows = rand::seq::index::sample(&mut rng, n, count).into_vec();
    rows.sort_unstable();
    (rows, rng)
}

fn empty_record(spec: &NoiseSpec) -> NoiseRecord {
    NoiseRecord {
        kind: spec.kind,
        rate: spec.rate,
        magnitude: spec.magnitude,
        indices: Vec::new(),
        original_labels: Vec::new(),
        sigma: None,
        max: None,
    }
}

/// Population standard deviation of every label column.
fn label_std(train: &Dataset) -> Vec<f64> {
    let n = train.len() as f64;
    (0..train.label_dim())
        .map(|k| {
            let col = train.y.column(k);
            let mean = col.iter().sum::<f64>() / n;
            (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
        })
        .collect()
}

pub fn inject_gaussian_noise(train: &Dataset, spec: &NoiseSpec) -> Result<(Dataset, NoiseRecord)> {
    if spec.kind != NoiseKind::Gaussian {
        return Err(Error::invalid("gaussian injector called with a non-gaussian spec"));
    }
    check_rate(spec.rate)?;
    if !(spec.magnitude >= 0.0 && spec.magnitude.is_finite()) {
        return Err(Error::invalid(format!(
            "noise magnitude {} must be non-negative",
            spec.magnitude
        )));
    }
    let (rows, mut rng) = choose_rows(train.len(), spec.rate, spec.seed);
    if rows.is_empty() {
        return Ok((train.clone(), empty_record(spec)));
    }
    let sigma = label_std(train);
    let normals = sigma
        .iter()
        .map(|s| Normal::new(0.0, spec.magnitude * s).map_err(|e| Error::invalid(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut y = train.y.clone();
    let mut original = Vec::with_capacity(rows.len());
    for &r in &rows {
        original.push(y.row(r).to_vec());
        for (v, normal) in y.row_mut(r).iter_mut().zip(&normals) {
            *v += normal.sample(&mut rng);
        }
    }
    let record = NoiseRecord {
        indices: rows,
        original_labels: original,
        sigma: Some(sigma),
        ..empty_record(spec)
    };
    Ok((train.with_labels(y)?, record))
}

pub fn inject_label_flip(train: &Dataset, spec: &NoiseSpec) -> Result<(Dataset, NoiseRecord)> {
    if spec.kind != NoiseKind::LabelFlip {
        return Err(Error::invalid("label-flip injector called with a non-flip spec"));
    }
    check_rate(spec.rate)?;
    let (rows, _) = choose_rows(train.len(), spec.rate, spec.seed);
    if rows.is_empty() {
        return Ok((train.clone(), empty_record(spec)));
    }
    let max: Vec<f64> = (0..train.label_dim())
        .map(|k| train.y.column(k).into_iter().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut y = train.y.clone();
    let mut original = Vec::with_capacity(rows.len());
    for &r in &rows {
        original.push(y.row(r).to_vec());
        for (v, m) in y.row_mut(r).iter_mut().zip(&max) {
            *v = m - *v;
        }
    }
    let record = NoiseRecord {
        indices: rows,
        original_labels: original,
        max: Some(max),
        ..empty_record(spec)
    };
    Ok((train.with_labels(y)?, record))
}

pub fn inject_noise(train: &Dataset, spec: &NoiseSpec) -> Result<(Dataset, NoiseRecord)> {
    match spec.kind {
        NoiseKind::Gaussian => inject_gaussian_noise(train, spec),
        NoiseKind::LabelFlip => inject_label_flip(train, spec),
    }
}

impl NoiseRecord {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_corrupted(&self, row: usize) -> bool {
        self.indices.binary_search(&row).is_ok()
    }

    /// Puts the original labels back.
    pub fn restore(&self, noisy: &Dataset) -> Result<Dataset> {
        self.validate(Some((noisy.len(), noisy.label_dim())))?;
        let mut y = noisy.y.clone();
        for (&r, labels) in self.indices.iter().zip(&self.original_labels) {
            y.row_mut(r).copy_from_slice(labels);
        }
        noisy.with_labels(y)
    }

    /// Structural checks; `shape` additionally bounds indices and label widths.
    pub fn validate(&self, shape: Option<(usize, usize)>) -> Result<()> {
        check_rate(self.rate)?;
        if self.indices.len() != self.original_labels.len() {
            return Err(Error::invalid("noise record has mismatched index and label counts"));
        }
        if self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("noise record indices must be strictly ascending"));
        }
        let width = self.original_labels.first().map(Vec::len);
        if self
            .original_labels
            .iter()
            .any(|l| Some(l.len()) != width || l.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::invalid("noise record labels are ragged or non-finite"));
        }
        if let Some((n, e)) = shape {
            if self.indices.last().is_some_and(|&i| i >= n) {
                return Err(Error::invalid("noise record index out of range"));
            }
            if width.is_some_and(|w| w != e) {
                return Err(Error::invalid("noise record label width does not match the dataset"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: NoiseRecord = serde_json::from_str(text)?;
        record.validate(None)?;
        Ok(record)
    }
}
