use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{per_sample_losses, TrainState};
use crate::robust::itlm::check_tau;
use crate::robust::{itlm_select, CleanSelection};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct O2UConfig {
    /// Epochs of ordinary training before the cyclic phase.
    pub pretrain_rounds: usize,
    pub cycle_length: usize,
    pub cycles: usize,
    pub lr_max: f64,
    pub lr_min: f64,
}

impl Default for O2UConfig {
    fn default() -> Self {
        O2UConfig {
            pretrain_rounds: 0,
            cycle_length: 10,
            cycles: 3,
            lr_max: 1e-2,
            lr_min: 1e-3,
        }
    }
}

impl O2UConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cycle_length < 2 {
            return Err(Error::invalid("o2u cycle length must be at least 2"));
        }
        if self.cycles == 0 {
            return Err(Error::invalid("o2u needs at least one cycle"));
        }
        if !(self.lr_min > 0.0 && self.lr_max > self.lr_min && self.lr_max.is_finite()) {
            return Err(Error::invalid(format!(
                "o2u learning rates need lr_max > lr_min > 0 (got {} and {})",
                self.lr_max, self.lr_min
            )));
        }
        Ok(())
    }

    pub fn epochs(&self) -> usize {
        self.cycle_length * self.cycles
    }
}

/// Linear decay from `lr_max` to `lr_min` across each cycle, then reset.
pub fn cyclic_lr(config: &O2UConfig, epoch: usize) -> f64 {
    let pos = (epoch % config.cycle_length) as f64;
    let span = (config.cycle_length - 1) as f64;
    config.lr_max - (config.lr_max - config.lr_min) * pos / span
}

/// Runs the cyclic phase on `state`, recording every sample's loss after each
/// epoch, and keeps the `floor(tau * n)` samples with the lowest mean loss.
/// `epoch` performs one training epoch at whatever rate the optimizer holds.
pub fn o2u_rank<F>(
    state: &mut TrainState,
    x: &Matrix,
    y: &Matrix,
    config: &O2UConfig,
    tau: f64,
    mut epoch: F,
) -> Result<CleanSelection>
where
    F: FnMut(&mut TrainState, usize) -> Result<()>,
{
    config.validate()?;
    check_tau(tau)?;
    if x.rows() == 0 {
        return Err(Error::Empty("o2u training set"));
    }
    let base_lr = state.optimizer.learning_rate();
    let mut total = vec![0.0; x.rows()];
    for t in 0..config.epochs() {
        state.optimizer.set_learning_rate(cyclic_lr(config, t));
        epoch(state, t)?;
        let losses = per_sample_losses(&state.params, x, y)?;
        for (acc, l) in total.iter_mut().zip(losses) {
            *acc += l;
        }
    }
    state.optimizer.set_learning_rate(base_lr);
    let epochs = config.epochs() as f64;
    let mean: Vec<f64> = total.into_iter().map(|s| s / epochs).collect();
    itlm_select(&mean, tau)
}
