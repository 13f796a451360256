use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::robust::{itlm_select, CleanSelection};
use crate::util::percentile;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfieConfig {
    /// Number of past predictions kept per sample.
    pub history: usize,
    /// Fixed variance threshold; when absent the percentile rule applies.
    pub threshold: Option<f64>,
    /// Percentile (0..=100) of current variances used as the threshold.
    pub percentile: f64,
}

impl Default for SelfieConfig {
    fn default() -> Self {
        SelfieConfig {
            history: 5,
            threshold: None,
            percentile: 25.0,
        }
    }
}

impl SelfieConfig {
    pub fn validate(&self) -> Result<()> {
        if self.history < 2 {
            return Err(Error::invalid("selfie history must hold at least 2 predictions"));
        }
        if !(0.0..=100.0).contains(&self.percentile) {
            return Err(Error::invalid(format!(
                "selfie percentile {} outside [0, 100]",
                self.percentile
            )));
        }
        if self.threshold.is_some_and(|t| !(t >= 0.0 && t.is_finite())) {
            return Err(Error::invalid("selfie threshold must be non-negative"));
        }
        Ok(())
    }
}

/// Ring buffers of recent predictions, one per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfieState {
    config: SelfieConfig,
    n: usize,
    e: usize,
    /// n x q x e, slot `(i, s)` at `(i * q + s) * e`.
    buffer: Vec<f64>,
    filled: usize,
    head: usize,
}

/// Result of one refurbishment step.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfieStep {
    /// The low-loss core.
    pub selection: CleanSelection,
    /// Samples outside the core whose labels were replaced, ascending.
    pub refurbished: Vec<usize>,
    /// Replacement labels aligned with `refurbished`.
    pub labels: Vec<Vec<f64>>,
    pub threshold: Option<f64>,
}

impl SelfieStep {
    /// Core and refurbished samples together, ascending.
    pub fn training_indices(&self) -> Vec<usize> {
        let mut all = self.selection.indices.clone();
        all.extend_from_slice(&self.refurbished);
        all.sort_unstable();
        all
    }

    /// `y` with refurbished labels overlaid.
    pub fn apply(&self, y: &Matrix) -> Matrix {
        let mut out = y.clone();
        for (&i, label) in self.refurbished.iter().zip(&self.labels) {
            out.row_mut(i).copy_from_slice(label);
        }
        out
    }
}

impl SelfieState {
    pub fn new(config: SelfieConfig, n: usize, e: usize) -> Result<Self> {
        config.validate()?;
        Ok(SelfieState {
            config,
            n,
            e,
            buffer: vec![0.0; n * config.history * e],
            filled: 0,
            head: 0,
        })
    }

    pub fn config(&self) -> &SelfieConfig {
        &self.config
    }

    /// Predictions currently stored (same for every sample).
    pub fn stored(&self) -> usize {
        self.filled
    }

    pub fn is_full(&self) -> bool {
        self.filled == self.config.history
    }

    fn push(&mut self, predictions: &Matrix) {
        let (q, e) = (self.config.history, self.e);
        for i in 0..self.n {
            let at = (i * q + self.head) * e;
            self.buffer[at..at + e].copy_from_slice(predictions.row(i));
        }
        self.head = (self.head + 1) % q;
        self.filled = (self.filled + 1).min(q);
    }

    /// Mean and mean-over-dims population variance of sample `i`'s history.
    pub fn moments(&self, i: usize) -> (Vec<f64>, f64) {
        let (q, e) = (self.config.history, self.e);
        let count = self.filled as f64;
        let slots = &self.buffer[i * q * e..(i + 1) * q * e];
        let mut mean = vec![0.0; e];
        for s in 0..self.filled {
            for (m, v) in mean.iter_mut().zip(&slots[s * e..(s + 1) * e]) {
                *m += v / count;
            }
        }
        let mut var = 0.0;
        for s in 0..self.filled {
            for (m, v) in mean.iter().zip(&slots[s * e..(s + 1) * e]) {
                var += (v - m) * (v - m);
            }
        }
        (mean, var / (count * e as f64))
    }
}

/// Records `predictions`, picks the `floor(tau * n)` lowest-loss samples as
/// the core, and relabels stable non-core samples with their mean prediction.
/// Only samples with a full history are eligible.
pub fn selfie_step(state: &mut SelfieState, predictions: &Matrix, losses: &[f64], tau: f64) -> Result<SelfieStep> {
    if predictions.rows() != state.n || predictions.cols() != state.e {
        return Err(Error::DimensionMismatch {
            context: "selfie predictions",
            expected: state.n * state.e,
            got: predictions.rows() * predictions.cols(),
        });
    }
    if losses.len() != state.n {
        return Err(Error::DimensionMismatch {
            context: "selfie losses",
            expected: state.n,
            got: losses.len(),
        });
    }
    state.push(predictions);
    let selection = itlm_select(losses, tau)?;
    let mut step = SelfieStep {
        selection,
        refurbished: Vec::new(),
        labels: Vec::new(),
        threshold: None,
    };
    if !state.is_full() {
        return Ok(step);
    }
    let moments: Vec<(Vec<f64>, f64)> = (0..state.n).map(|i| state.moments(i)).collect();
    let threshold = match state.config.threshold {
        Some(t) => t,
        None => {
            let variances: Vec<f64> = moments.iter().map(|(_, v)| *v).collect();
            percentile(&variances, state.config.percentile).expect("non-empty")
        }
    };
    step.threshold = Some(threshold);
    for (i, (mean, var)) in moments.into_iter().enumerate() {
        if var <= threshold && !step.selection.contains(i) {
            step.refurbished.push(i);
            step.labels.push(mean);
        }
    }
    Ok(step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(history: usize, threshold: f64) -> SelfieConfig {
        SelfieConfig {
            history,
            threshold: Some(threshold),
            percentile: 25.0,
        }
    }

    #[test]
    fn identical_predictions_are_refurbished() {
        let mut st = SelfieState::new(fixed(3, 0.0), 2, 1).unwrap();
        let p = Matrix::column_vector(&[5.0, 1.0]);
        let losses = [0.0, 9.0];
        let mut step = selfie_step(&mut st, &p, &losses, 0.5).unwrap();
        assert!(step.refurbished.is_empty());
        for _ in 0..2 {
            step = selfie_step(&mut st, &p, &losses, 0.5).unwrap();
        }
        assert_eq!(step.refurbished, vec![1]);
        assert_eq!(step.labels, vec![vec![1.0]]);
        assert_eq!(step.training_indices(), vec![0, 1]);
        assert_eq!(step.apply(&Matrix::column_vector(&[0.0, 7.0])).get(1, 0), 1.0);
    }

    #[test]
    fn two_point_history() {
        for (threshold, expected) in [(1.0, vec![1]), (0.99, vec![])] {
            let mut st = SelfieState::new(fixed(2, threshold), 2, 1).unwrap();
            selfie_step(&mut st, &Matrix::column_vector(&[0.0, 0.0]), &[0.0, 1.0], 0.5).unwrap();
            let step = selfie_step(&mut st, &Matrix::column_vector(&[0.0, 2.0]), &[0.0, 1.0], 0.5).unwrap();
            assert_eq!(st.moments(1), (vec![1.0], 1.0));
            assert_eq!(step.refurbished, expected);
        }
    }

    #[test]
    fn ring_buffer_forgets_old_predictions() {
        let mut st = SelfieState::new(fixed(2, 0.0), 1, 2).unwrap();
        for v in [9.0, 3.0, 3.0] {
            st.push(&Matrix::from_rows(&[[v, v]]).unwrap());
        }
        assert_eq!(st.moments(0), (vec![3.0, 3.0], 0.0));
        assert_eq!(st.stored(), 2);
    }

    #[test]
    fn shape_checks() {
        let mut st = SelfieState::new(SelfieConfig::default(), 3, 1).unwrap();
        assert!(selfie_step(&mut st, &Matrix::column_vector(&[1.0]), &[0.0], 0.5).is_err());
        assert!(SelfieState::new(fixed(1, 0.0), 3, 1).is_err());
    }
}
