use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{DatasetKind, MixupKind};

/// Per-dataset defaults: architecture, optimizer and bandwidth settings for
/// the four benchmark datasets, plus their split sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Spectrum,
    No2,
    Airfoil,
    ExchangeRate,
}

pub(crate) struct PresetValues {
    pub dataset: DatasetKind,
    pub label_dims: usize,
    pub window: Option<usize>,
    pub horizon: Option<usize>,
    pub mixup: MixupKind,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub bandwidths: &'static [f64],
    pub initial_bandwidth: f64,
    pub update_interval: usize,
    pub lookahead: usize,
    pub alpha: f64,
    pub noise_magnitude: f64,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Spectrum, Preset::No2, Preset::Airfoil, Preset::ExchangeRate];

    pub fn key(self) -> &'static str {
        match self {
            Preset::Spectrum => "spectrum",
            Preset::No2 => "no2",
            Preset::Airfoil => "airfoil",
            Preset::ExchangeRate => "exchange_rate",
        }
    }

    pub(crate) fn values(self) -> PresetValues {
        match self {
            Preset::Spectrum => PresetValues {
                dataset: DatasetKind::SpectrumLike,
                label_dims: 4,
                window: None,
                horizon: None,
                mixup: MixupKind::Mixup,
                batch_size: 128,
                learning_rate: 1e-2,
                max_epochs: 2000,
                bandwidths: &[5.0, 10.0, 15.0, 20.0],
                initial_bandwidth: 20.0,
                update_interval: 500,
                lookahead: 500,
                alpha: 2.0,
                noise_magnitude: 2.0,
                train_size: 2000,
                validation_size: 500,
                test_size: 500,
            },
            Preset::No2 => PresetValues {
                dataset: DatasetKind::No2Like,
                label_dims: 1,
                window: None,
                horizon: None,
                mixup: MixupKind::Mixup,
                batch_size: 32,
                learning_rate: 1e-2,
                max_epochs: 200,
                bandwidths: &[1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 1.0],
                initial_bandwidth: 2.0,
                update_interval: 100,
                lookahead: 100,
                alpha: 2.0,
                noise_magnitude: 4.0,
                train_size: 200,
                validation_size: 200,
                test_size: 100,
            },
            Preset::Airfoil => PresetValues {
                dataset: DatasetKind::AirfoilLike,
                label_dims: 1,
                window: None,
                horizon: None,
                mixup: MixupKind::Manimix,
                batch_size: 16,
                learning_rate: 1e-2,
                max_epochs: 400,
                bandwidths: &[1e-3, 1e-2, 1e-1, 1.0, 10.0],
                initial_bandwidth: 10.0,
                update_interval: 200,
                lookahead: 200,
                alpha: 0.5,
                noise_magnitude: 2.0,
                train_size: 1000,
                validation_size: 400,
                test_size: 103,
            },
            Preset::ExchangeRate => PresetValues {
                dataset: DatasetKind::ExchangeLike,
                label_dims: 8,
                window: Some(168),
                horizon: Some(12),
                mixup: MixupKind::Mixup,
                batch_size: 128,
                learning_rate: 1e-3,
                max_epochs: 200,
                bandwidths: &[1e-3, 1e-2, 5e-2, 1e-1],
                initial_bandwidth: 2.0,
                update_interval: 50,
                lookahead: 50,
                alpha: 2.0,
                noise_magnitude: 5.0,
                train_size: 4373,
                validation_size: 1518,
                test_size: 1518,
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.key() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}`")))
    }
}
