use serde::{Deserialize, Serialize};

use crate::pipeline::PipelineMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Warmup,
    Tune,
    Step,
}

/// One main-loop iteration. A tune entry covers `rounds_consumed` rounds of
/// the winning candidate; everything else covers one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundLog {
    pub round: usize,
    pub phase: Phase,
    /// `None` when the round trained without mixing.
    pub bandwidth: Option<f64>,
    pub clean_size: usize,
    pub train_loss: f64,
    pub val_rmse: Option<f64>,
    pub detection_accuracy: Option<f64>,
    pub wall_ms: f64,
    pub rounds_consumed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneEvent {
    pub round: usize,
    pub candidates: Vec<f64>,
    pub val_rmse: Vec<f64>,
    pub chosen: f64,
    pub rounds: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub bandwidth: f64,
    pub val_rmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineReport {
    pub mode: PipelineMode,
    pub logs: Vec<RoundLog>,
    pub tune_events: Vec<TuneEvent>,
    /// Per-bandwidth results of a grid search, in candidate order.
    pub grid: Vec<GridPoint>,
    pub chosen_bandwidth: Option<f64>,
    /// Rounds spent outside the kept trajectory: losing tune candidates and
    /// grid runs, and the cyclic ranking phase.
    pub overhead_rounds: usize,
    /// Rounds on the kept trajectory.
    pub rounds: usize,
    pub converged: bool,
    /// Round after which the returned parameters were taken, when the best
    /// validation checkpoint was restored.
    pub best_round: Option<usize>,
    pub final_selection: Option<Vec<usize>>,
    pub wall_ms: f64,
}

impl PipelineReport {
    pub(crate) fn new(mode: PipelineMode) -> Self {
        PipelineReport {
            mode,
            logs: Vec::new(),
            tune_events: Vec::new(),
            grid: Vec::new(),
            chosen_bandwidth: None,
            overhead_rounds: 0,
            rounds: 0,
            converged: false,
            best_round: None,
            final_selection: None,
            wall_ms: 0.0,
        }
    }

    /// `(round, bandwidth)` at every change of the active bandwidth.
    pub fn bandwidth_timeline(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for log in &self.logs {
            if let Some(b) = log.bandwidth {
                if out.last().is_none_or(|&(_, prev)| prev != b) {
                    out.push((log.round, b));
                }
            }
        }
        out
    }

    /// `(round, accuracy)` for every round that scored a selection.
    pub fn detection_timeline(&self) -> Vec<(usize, f64)> {
        self.logs
            .iter()
            .filter_map(|l| l.detection_accuracy.map(|d| (l.round, d)))
            .collect()
    }

    pub fn final_detection_accuracy(&self) -> Option<f64> {
        self.logs.iter().rev().find_map(|l| l.detection_accuracy)
    }

    pub fn phases(&self) -> Vec<Phase> {
        self.logs.iter().map(|l| l.phase).collect()
    }
}
