use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixup::{LabelMetric, MixConfig, MixMode};
use crate::nn::{AdamConfig, ModelSpec};
use crate::robust::{O2UConfig, SelfieConfig};
use crate::util::floor_count;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    CmixupOnly,
    RobustOnly,
    RThenC,
    CThenR,
    CThenRPlusC,
    Rcmixup,
    RcmixupDecay,
}

impl PipelineMode {
    pub const ALL: [PipelineMode; 7] = [
        PipelineMode::CmixupOnly,
        PipelineMode::RobustOnly,
        PipelineMode::RThenC,
        PipelineMode::CThenR,
        PipelineMode::CThenRPlusC,
        PipelineMode::Rcmixup,
        PipelineMode::RcmixupDecay,
    ];

    pub fn key(self) -> &'static str {
        match self {
            PipelineMode::CmixupOnly => "cmixup_only",
            PipelineMode::RobustOnly => "robust_only",
            PipelineMode::RThenC => "r_then_c",
            PipelineMode::CThenR => "c_then_r",
            PipelineMode::CThenRPlusC => "c_then_r_plus_c",
            PipelineMode::Rcmixup => "rcmixup",
            PipelineMode::RcmixupDecay => "rcmixup_decay",
        }
    }

    /// Name used in comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            PipelineMode::CmixupOnly => "C-Mixup",
            PipelineMode::RobustOnly => "Robust training",
            PipelineMode::RThenC => "R→C",
            PipelineMode::CThenR => "C→R",
            PipelineMode::CThenRPlusC => "C→R+C",
            PipelineMode::Rcmixup => "RC-Mixup",
            PipelineMode::RcmixupDecay => "RC-Mixup (decay)",
        }
    }

    /// Modes that pick one fixed bandwidth by grid search.
    pub fn grid_searched(self) -> bool {
        matches!(
            self,
            PipelineMode::CmixupOnly | PipelineMode::RThenC | PipelineMode::CThenR | PipelineMode::CThenRPlusC
        )
    }
}

impl fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for PipelineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PipelineMode::ALL
            .into_iter()
            .find(|m| m.key() == s)
            .ok_or_else(|| Error::invalid(format!("unknown pipeline mode `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RobustBackend {
    Itlm,
    O2u(O2UConfig),
    Selfie(SelfieConfig),
}

impl RobustBackend {
    pub fn key(&self) -> &'static str {
        match self {
            RobustBackend::Itlm => "itlm",
            RobustBackend::O2u(_) => "o2u",
            RobustBackend::Selfie(_) => "selfie",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RobustBackend::Itlm => Ok(()),
            RobustBackend::O2u(c) => c.validate(),
            RobustBackend::Selfie(c) => c.validate(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub enabled: bool,
    /// Fraction removed from the bandwidth every update interval.
    pub rate: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            enabled: false,
            rate: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RCConfig {
    pub bandwidths: Vec<f64>,
    /// Loop iterations between bandwidth updates.
    pub update_interval: usize,
    /// Rounds each candidate trains before being compared.
    pub lookahead: usize,
    pub tau: f64,
    pub alpha: f64,
    pub initial_bandwidth: f64,
    /// Defaults to a tenth of `max_rounds`.
    pub warmup_rounds: Option<usize>,
    /// Total round budget, warm-up included.
    pub max_rounds: usize,
    pub patience: usize,
    pub min_improvement: f64,
    pub decay: DecayConfig,
    pub metric: LabelMetric,
    /// Return the best-validating parameters of the kept trajectory instead
    /// of the last ones.
    #[serde(default = "default_true")]
    pub restore_best: bool,
}

fn default_true() -> bool {
    true
}

impl Default for RCConfig {
    fn default() -> Self {
        RCConfig {
            bandwidths: vec![0.1, 1.0, 10.0],
            update_interval: 100,
            lookahead: 100,
            tau: 0.7,
            alpha: 2.0,
            initial_bandwidth: 1.0,
            warmup_rounds: None,
            max_rounds: 200,
            patience: 50,
            min_improvement: 1e-4,
            decay: DecayConfig::default(),
            metric: LabelMetric::Squared,
            restore_best: true,
        }
    }
}

impl RCConfig {
    pub fn warmup(&self) -> usize {
        self.warmup_rounds
            .unwrap_or_else(|| floor_count(0.1, self.max_rounds))
            .min(self.max_rounds)
    }

    /// Every violated constraint, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.bandwidths.is_empty() {
            out.push("bandwidth candidates must not be empty".to_string());
        }
        if self.bandwidths.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            out.push("bandwidth candidates must be positive".to_string());
        }
        if self.update_interval == 0 {
            out.push("update_interval must be at least 1".to_string());
        }
        if self.lookahead == 0 {
            out.push("lookahead must be at least 1".to_string());
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            out.push(format!("tau {} must lie in (0, 1]", self.tau));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            out.push(format!("alpha {} must be positive", self.alpha));
        }
        if !(self.initial_bandwidth > 0.0 && self.initial_bandwidth.is_finite()) {
            out.push(format!("initial bandwidth {} must be positive", self.initial_bandwidth));
        }
        if self.max_rounds == 0 {
            out.push("max_rounds must be at least 1".to_string());
        }
        if self.warmup_rounds.is_some_and(|w| w > self.max_rounds) {
            out.push("warmup_rounds exceeds max_rounds".to_string());
        }
        if self.patience == 0 {
            out.push("patience must be at least 1".to_string());
        }
        if !(self.min_improvement >= 0.0 && self.min_improvement.is_finite()) {
            out.push("min_improvement must be non-negative".to_string());
        }
        if !(0.0..1.0).contains(&self.decay.rate) {
            out.push(format!("decay rate {} must lie in [0, 1)", self.decay.rate));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(problems.join("; ")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerConfig {
    pub hidden_dims: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub mix_mode: MixMode,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            hidden_dims: vec![128],
            learning_rate: 1e-3,
            batch_size: 32,
            mix_mode: MixMode::Input,
        }
    }
}

impl TrainerConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            out.push("hidden_dims must be non-empty and positive".to_string());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            out.push(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.batch_size == 0 {
            out.push("batch_size must be at least 1".to_string());
        }
        if let MixMode::Manifold { layer } = self.mix_mode {
            if layer == 0 || layer > self.hidden_dims.len() {
                out.push(format!(
                    "manifold mixing layer {layer} must name a hidden layer (1..={})",
                    self.hidden_dims.len()
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(problems.join("; ")))
        }
    }

    pub fn model_spec(&self, input_dim: usize, output_dim: usize) -> Result<ModelSpec> {
        ModelSpec::new(input_dim, self.hidden_dims.clone(), output_dim)
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_learning_rate(self.learning_rate)
    }

    pub fn mix(&self, alpha: f64) -> MixConfig {
        MixConfig {
            alpha,
            mode: self.mix_mode,
        }
    }
}
