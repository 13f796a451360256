use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mixup::{cmixup_epoch, plain_epoch, KernelCache, MixConfig, MixPlan};
use crate::nn::{per_sample_losses, TrainState};
use crate::robust::{itlm_select, CleanSelection};

/// One epoch on the rows in `active`, mixed at `bandwidth` when given.
#[allow(clippy::too_many_arguments)]
pub(crate) fn train_subset<R: Rng + ?Sized>(
    state: &mut TrainState,
    x: &Matrix,
    y: &Matrix,
    active: &[usize],
    bandwidth: Option<f64>,
    cache: &KernelCache,
    mix: &MixConfig,
    batch_size: usize,
    rng: &mut R,
) -> Result<(Option<MixPlan>, f64)> {
    match bandwidth {
        Some(b) => {
            let sampler = cache.sampler(b, active)?;
            let (plan, set) = cmixup_epoch(x, y, active, &sampler, mix, rng)?;
            let loss = state.train_epoch(&set, batch_size, rng)?;
            Ok((Some(plan), loss))
        }
        None => {
            let set = plain_epoch(x, y, active)?;
            Ok((None, state.train_epoch(&set, batch_size, rng)?))
        }
    }
}

/// `rounds` epochs of mixing over the whole (uncleaned) set. Returns the
/// training loss of each round.
#[allow(clippy::too_many_arguments)]
pub fn warmup_train<R: Rng + ?Sized>(
    state: &mut TrainState,
    x: &Matrix,
    y: &Matrix,
    cache: &KernelCache,
    bandwidth: f64,
    mix: &MixConfig,
    batch_size: usize,
    rounds: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..x.rows()).collect();
    (0..rounds)
        .map(|_| train_subset(state, x, y, &all, Some(bandwidth), cache, mix, batch_size, rng).map(|(_, l)| l))
        .collect()
}

/// Select the low-loss subset, mix within it, update once.
#[allow(clippy::too_many_arguments)]
pub fn rc_round<R: Rng + ?Sized>(
    state: &mut TrainState,
    x: &Matrix,
    y: &Matrix,
    cache: &KernelCache,
    bandwidth: f64,
    tau: f64,
    mix: &MixConfig,
    batch_size: usize,
    rng: &mut R,
) -> Result<(CleanSelection, MixPlan, f64)> {
    let losses = per_sample_losses(&state.params, x, y)?;
    let selection = itlm_select(&losses, tau)?;
    let (plan, loss) = train_subset(
        state,
        x,
        y,
        &selection.indices,
        Some(bandwidth),
        cache,
        mix,
        batch_size,
        rng,
    )?;
    Ok((selection, plan.expect("mixing was requested"), loss))
}

pub fn decay_bandwidth(bandwidth: f64, rate: f64) -> Result<f64> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::invalid(format!("bandwidth {bandwidth} must be positive")));
    }
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid(format!("decay rate {rate} must lie in [0, 1)")));
    }
    Ok(bandwidth * (1.0 - rate))
}

/// Index of the smallest score; NaN counts as worst, ties go to the first.
pub fn pick_lowest(scores: &[f64]) -> Option<usize> {
    let key = |s: f64| if s.is_nan() { f64::INFINITY } else { s };
    (0..scores.len()).min_by(|&a, &b| key(scores[a]).total_cmp(&key(scores[b])).then(a.cmp(&b)))
}

#[derive(Clone, Debug)]
pub struct TuneOutcome<C> {
    pub index: usize,
    pub bandwidth: f64,
    pub state: C,
    /// Validation score of every candidate, in candidate order.
    pub scores: Vec<f64>,
}

/// Runs every candidate from its own copy of `snapshot` (in parallel) and
/// keeps the lowest-scoring one. `run(index, bandwidth, copy)` returns the
/// trained copy and its score.
pub fn tune_bandwidth<C, F>(snapshot: &C, candidates: &[f64], run: F) -> Result<TuneOutcome<C>>
where
    C: Clone + Send + Sync,
    F: Fn(usize, f64, C) -> Result<(C, f64)> + Sync,
{
    if candidates.is_empty() {
        return Err(Error::Empty("bandwidth candidates"));
    }
    let results: Vec<Result<(C, f64)>> = candidates
        .par_iter()
        .enumerate()
        .map(|(k, &b)| run(k, b, snapshot.clone()))
        .collect();
    let mut states = Vec::with_capacity(results.len());
    let mut scores = Vec::with_capacity(results.len());
    for r in results {
        let (s, score) = r?;
        states.push(Some(s));
        scores.push(score);
    }
    let index = pick_lowest(&scores).expect("non-empty");
    Ok(TuneOutcome {
        index,
        bandwidth: candidates[index],
        state: states[index].take().expect("present"),
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_examples() {
        assert!((decay_bandwidth(20.0, 0.1).unwrap() - 18.0).abs() < 1e-12);
        assert_eq!(decay_bandwidth(3.0, 0.0).unwrap(), 3.0);
        assert!(decay_bandwidth(3.0, 1.0).is_err());
        let mut b = 5.0;
        for _ in 0..50 {
            let next = decay_bandwidth(b, 0.2).unwrap();
            assert!(next < b);
            b = next;
        }
    }

    #[test]
    fn stubbed_tuning_picks_the_argmin() {
        let stub = [0.3, 0.1, 0.2];
        let out = tune_bandwidth(&0u32, &[1.0, 2.0, 3.0], |k, _, s| Ok((s + 1, stub[k]))).unwrap();
        assert_eq!((out.index, out.bandwidth, out.state), (1, 2.0, 1));
        assert_eq!(out.scores, stub);
    }

    #[test]
    fn single_candidate_and_empty_set() {
        let out = tune_bandwidth(&7u8, &[4.0], |_, _, s| Ok((s, 1.0))).unwrap();
        assert_eq!(out.bandwidth, 4.0);
        assert!(tune_bandwidth(&7u8, &[], |_, _, s| Ok((s, 1.0))).is_err());
    }

    #[test]
    fn pick_lowest_handles_nan_and_ties() {
        assert_eq!(pick_lowest(&[f64::NAN, 2.0, 2.0]), Some(1));
        assert_eq!(pick_lowest(&[]), None);
    }
}
