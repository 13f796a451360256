use std::sync::Arc;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::data::{Dataset, NoiseRecord};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mixup::{build_label_distances_with, KernelCache, MixConfig};
use crate::nn::{per_sample_losses, predict, ModelSpec, Params, TrainState};
use crate::pipeline::steps::train_subset;
use crate::pipeline::{
    decay_bandwidth, pick_lowest, tune_bandwidth, GridPoint, Phase, PipelineMode, PipelineReport, RCConfig,
    RobustBackend, RoundLog, TrainerConfig, TuneEvent,
};
use crate::robust::{detection_accuracy, itlm_select, o2u_rank, selfie_step, CleanSelection, SelfieState};
use crate::util::mix_seed;

// Independent random streams derived from the run seed. Rounds are keyed by
// their global index, so every tuning candidate and every grid run sees the
// same shuffles and mixing draws at the same round.
const STREAM_INIT: u64 = 0;
const STREAM_ROUND: u64 = 1;
const STREAM_RANK: u64 = 2;

pub struct PipelineOutcome {
    pub state: TrainState,
    pub report: PipelineReport,
}

#[derive(Clone)]
enum Robust {
    Itlm,
    /// Filled in once the cyclic ranking phase has run.
    O2u(Option<Arc<CleanSelection>>),
    Selfie(Box<SelfieState>),
}

#[derive(Clone)]
struct Model {
    state: TrainState,
    robust: Robust,
    last_selection: Option<Vec<usize>>,
}

/// A training subset frozen after a robust phase, with refurbished labels if
/// the back-end produced any.
struct FixedSet {
    active: Vec<usize>,
    labels: Option<Matrix>,
}

enum Cleaning<'c> {
    Off,
    Robust,
    Fixed(&'c FixedSet),
}

#[derive(Clone)]
struct RoundOut {
    clean_size: usize,
    train_loss: f64,
    detection: Option<f64>,
}

struct Selected {
    active: Vec<usize>,
    labels: Option<Matrix>,
    selection: Option<CleanSelection>,
}

#[derive(Clone)]
struct Convergence {
    best: f64,
    /// Parameters and end round of the best validation score so far.
    checkpoint: Option<(Params, usize)>,
    stale: usize,
    patience: usize,
    min_improvement: f64,
}

impl Convergence {
    fn new(rc: &RCConfig) -> Self {
        Convergence {
            best: f64::INFINITY,
            checkpoint: None,
            stale: 0,
            patience: rc.patience,
            min_improvement: rc.min_improvement,
        }
    }

    /// Records the validation score after a log entry ending at `end`;
    /// returns whether patience ran out.
    fn observe(&mut self, val: Option<f64>, rounds: usize, state: &TrainState, end: usize) -> bool {
        let Some(v) = val else {
            return false;
        };
        if v < self.best {
            self.checkpoint = Some((state.params.clone(), end));
        }
        if v < self.best - self.min_improvement {
            self.stale = 0;
        } else {
            self.stale += rounds;
        }
        self.best = self.best.min(v);
        self.stale >= self.patience
    }
}

struct Engine<'a> {
    x: &'a Matrix,
    y: &'a Matrix,
    validation: Option<&'a Dataset>,
    noise: Option<&'a NoiseRecord>,
    cache: KernelCache,
    rc: &'a RCConfig,
    trainer: &'a TrainerConfig,
    backend: &'a RobustBackend,
    mix: MixConfig,
    spec: ModelSpec,
    seed: u64,
}

/// Runs one training configuration end to end. `validation` drives
/// bandwidth selection and early stopping; `noise` only feeds the detection
/// accuracy columns of the log.
#[allow(clippy::too_many_arguments)]
pub fn run_pipeline(
    mode: PipelineMode,
    rc: &RCConfig,
    trainer: &TrainerConfig,
    backend: &RobustBackend,
    train: &Dataset,
    validation: Option<&Dataset>,
    noise: Option<&NoiseRecord>,
    seed: u64,
) -> Result<PipelineOutcome> {
    let mut problems = rc.problems();
    problems.extend(trainer.problems());
    if let Err(e) = backend.validate() {
        problems.push(e.to_string());
    }
    if let Some(v) = validation {
        if v.feature_dim() != train.feature_dim() || v.label_dim() != train.label_dim() {
            problems.push("validation shape does not match training shape".to_string());
        }
    }
    let needs_validation = mode == PipelineMode::Rcmixup || (mode.grid_searched() && rc.bandwidths.len() > 1);
    if needs_validation && validation.is_none() {
        problems.push(format!("mode {mode} needs a validation set"));
    }
    if let Some(r) = noise {
        if let Err(e) = r.validate(Some((train.len(), train.label_dim()))) {
            problems.push(e.to_string());
        }
    }
    if !problems.is_empty() {
        return Err(Error::InvalidSpec(problems.join("; ")));
    }

    let started = Instant::now();
    let distances = Arc::new(build_label_distances_with(&train.y, rc.metric)?);
    let engine = Engine {
        x: &train.x,
        y: &train.y,
        validation,
        noise,
        cache: KernelCache::new(distances),
        rc,
        trainer,
        backend,
        mix: trainer.mix(rc.alpha),
        spec: trainer.model_spec(train.feature_dim(), train.label_dim())?,
        seed,
    };
    let (model, mut report) = match mode {
        PipelineMode::Rcmixup => engine.run_rcmixup(false)?,
        PipelineMode::RcmixupDecay => engine.run_rcmixup(true)?,
        PipelineMode::RobustOnly => engine.run_robust_only()?,
        PipelineMode::CmixupOnly => engine.grid(mode, (0, 0), |b| engine.run_cmixup(b))?,
        PipelineMode::CThenR => engine.grid(mode, (0, 0), |b| engine.run_c_then_r(b))?,
        PipelineMode::CThenRPlusC => engine.grid(mode, (0, 0), |b| engine.run_c_then_r_plus_c(b))?,
        PipelineMode::RThenC => engine.run_r_then_c()?,
    };
    report.mode = mode;
    report.final_selection = model.last_selection.clone();
    report.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(PipelineOutcome {
        state: model.state,
        report,
    })
}

/// Trains a robust-only model on the noisy validation set itself and keeps
/// the `floor(tau_v * n)` samples its final model fits best.
pub fn clean_validation_with_rt(
    noisy_validation: &Dataset,
    tau_v: f64,
    rc: &RCConfig,
    trainer: &TrainerConfig,
    seed: u64,
) -> Result<(Dataset, CleanSelection)> {
    if noisy_validation.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    if !(tau_v > 0.0 && tau_v <= 1.0) {
        return Err(Error::invalid(format!(
            "validation clean ratio {tau_v} must lie in (0, 1]"
        )));
    }
    if tau_v == 1.0 {
        return Ok((noisy_validation.clone(), CleanSelection::all(noisy_validation.len())));
    }
    let rc = RCConfig {
        tau: tau_v,
        ..rc.clone()
    };
    let outcome = run_pipeline(
        PipelineMode::RobustOnly,
        &rc,
        trainer,
        &RobustBackend::Itlm,
        noisy_validation,
        None,
        None,
        seed,
    )?;
    let losses = per_sample_losses(&outcome.state.params, &noisy_validation.x, &noisy_validation.y)?;
    let selection = itlm_select(&losses, tau_v)?;
    if selection.is_empty() {
        return Err(Error::Empty("cleaned validation set"));
    }
    Ok((noisy_validation.subset(&selection.indices)?, selection))
}

impl Engine<'_> {
    fn rng(&self, stream: u64, index: usize) -> StdRng {
        StdRng::seed_from_u64(mix_seed(self.seed, stream, index as u64))
    }

    fn init_model(&self) -> Result<Model> {
        let state = TrainState::new(&self.spec, mix_seed(self.seed, STREAM_INIT, 0), self.trainer.adam())?;
        let robust = match self.backend {
            RobustBackend::Itlm => Robust::Itlm,
            RobustBackend::O2u(_) => Robust::O2u(None),
            RobustBackend::Selfie(cfg) => {
                Robust::Selfie(Box::new(SelfieState::new(*cfg, self.x.rows(), self.y.cols())?))
            }
        };
        Ok(Model {
            state,
            robust,
            last_selection: None,
        })
    }

    fn all(&self) -> Vec<usize> {
        (0..self.x.rows()).collect()
    }

    fn val_rmse(&self, state: &TrainState) -> Result<Option<f64>> {
        match self.validation {
            Some(v) => {
                let pred = predict(&state.params, &v.x)?;
                Ok(Some(crate::eval::rmse(&v.y, &pred)?))
            }
            None => Ok(None),
        }
    }

    /// Applies the robust back-end to the current model.
    fn select(&self, m: &mut Model) -> Result<Selected> {
        let tau = self.rc.tau;
        match &mut m.robust {
            Robust::Itlm => {
                let losses = per_sample_losses(&m.state.params, self.x, self.y)?;
                let sel = itlm_select(&losses, tau)?;
                Ok(Selected {
                    active: sel.indices.clone(),
                    labels: None,
                    selection: Some(sel),
                })
            }
            Robust::O2u(Some(sel)) => Ok(Selected {
                active: sel.indices.clone(),
                labels: None,
                selection: Some((**sel).clone()),
            }),
            Robust::O2u(None) => Err(Error::invalid("o2u selection requested before ranking")),
            Robust::Selfie(state) => {
                let pred = predict(&m.state.params, self.x)?;
                let losses = crate::nn::row_losses(&pred, self.y);
                let step = selfie_step(state, &pred, &losses, tau)?;
                let labels = (!step.refurbished.is_empty()).then(|| step.apply(self.y));
                Ok(Selected {
                    active: step.training_indices(),
                    labels,
                    selection: Some(step.selection),
                })
            }
        }
    }

    fn round(&self, m: &mut Model, round: usize, bandwidth: Option<f64>, cleaning: &Cleaning) -> Result<RoundOut> {
        let picked = match cleaning {
            Cleaning::Off => Selected {
                active: self.all(),
                labels: None,
                selection: None,
            },
            Cleaning::Robust => self.select(m)?,
            Cleaning::Fixed(set) => Selected {
                active: set.active.clone(),
                labels: set.labels.clone(),
                selection: None,
            },
        };
        let y = picked.labels.as_ref().unwrap_or(self.y);
        let mut rng = self.rng(STREAM_ROUND, round);
        let (_, train_loss) = train_subset(
            &mut m.state,
            self.x,
            y,
            &picked.active,
            bandwidth,
            &self.cache,
            &self.mix,
            self.trainer.batch_size,
            &mut rng,
        )?;
        let detection = match (&picked.selection, self.noise) {
            (Some(sel), Some(record)) => detection_accuracy(sel, record),
            _ => None,
        };
        if let Some(sel) = picked.selection {
            m.last_selection = Some(sel.indices);
        }
        Ok(RoundOut {
            clean_size: picked.active.len(),
            train_loss,
            detection,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn log(
        &self,
        rep: &mut PipelineReport,
        round: usize,
        phase: Phase,
        bandwidth: Option<f64>,
        out: &RoundOut,
        val_rmse: Option<f64>,
        started: Instant,
        rounds_consumed: usize,
    ) {
        rep.logs.push(RoundLog {
            round,
            phase,
            bandwidth,
            clean_size: out.clean_size,
            train_loss: out.train_loss,
            val_rmse,
            detection_accuracy: out.detection,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            rounds_consumed,
        });
        rep.rounds = round + rounds_consumed;
    }

    fn warmup(
        &self,
        m: &mut Model,
        rep: &mut PipelineReport,
        conv: &mut Convergence,
        rounds: std::ops::Range<usize>,
        bandwidth: Option<f64>,
    ) -> Result<()> {
        for round in rounds {
            let t0 = Instant::now();
            let out = self.round(m, round, bandwidth, &Cleaning::Off)?;
            let val = self.val_rmse(&m.state)?;
            conv.observe(val, 1, &m.state, round + 1);
            self.log(rep, round, Phase::Warmup, bandwidth, &out, val, t0, 1);
        }
        Ok(())
    }

    /// Single-bandwidth rounds until `end` or convergence. Returns the next
    /// round index.
    #[allow(clippy::too_many_arguments)]
    fn fixed(
        &self,
        m: &mut Model,
        rep: &mut PipelineReport,
        conv: &mut Convergence,
        rounds: std::ops::Range<usize>,
        bandwidth: Option<f64>,
        cleaning: &Cleaning,
    ) -> Result<usize> {
        conv.stale = 0;
        for round in rounds.clone() {
            let t0 = Instant::now();
            let out = self.round(m, round, bandwidth, cleaning)?;
            let val = self.val_rmse(&m.state)?;
            let done = conv.observe(val, 1, &m.state, round + 1);
            self.log(rep, round, Phase::Step, bandwidth, &out, val, t0, 1);
            if done {
                rep.converged = true;
                return Ok(round + 1);
            }
        }
        Ok(rounds.end)
    }

    /// Cyclic-rate ranking for the O2U back-end, run on a copy of the model
    /// after pre-training. No-op for the other back-ends.
    fn rank(&self, m: &mut Model, rep: &mut PipelineReport, bandwidth: Option<f64>) -> Result<()> {
        let (RobustBackend::O2u(cfg), Robust::O2u(None)) = (self.backend, &m.robust) else {
            return Ok(());
        };
        let all = self.all();
        let mut probe = m.state.clone();
        let epoch = |s: &mut TrainState, t: usize| -> Result<()> {
            let mut rng = self.rng(STREAM_RANK, t);
            train_subset(
                s,
                self.x,
                self.y,
                &all,
                bandwidth,
                &self.cache,
                &self.mix,
                self.trainer.batch_size,
                &mut rng,
            )
            .map(|_| ())
        };
        for t in 0..cfg.pretrain_rounds {
            epoch(&mut probe, t)?;
        }
        let sel = o2u_rank(&mut probe, self.x, self.y, cfg, self.rc.tau, |s, t| {
            epoch(s, cfg.pretrain_rounds + t)
        })?;
        m.robust = Robust::O2u(Some(Arc::new(sel)));
        rep.overhead_rounds += cfg.pretrain_rounds + cfg.epochs();
        Ok(())
    }

    fn interleaved(
        &self,
        m: &mut Model,
        rep: &mut PipelineReport,
        conv: &mut Convergence,
        rounds: std::ops::Range<usize>,
        decay: bool,
    ) -> Result<()> {
        #[derive(Clone)]
        struct Candidate {
            model: Model,
            last: Option<RoundOut>,
            conv: Convergence,
        }

        let rc = self.rc;
        let mut bandwidth = rc.initial_bandwidth;
        let mut round = rounds.start;
        let mut iteration = 0usize;
        conv.stale = 0;
        while round < rounds.end {
            let t0 = Instant::now();
            let on_interval = iteration.is_multiple_of(rc.update_interval);
            let consumed;
            let done;
            if on_interval && !decay {
                let k = rc.lookahead.min(rounds.end - round);
                let snapshot = Candidate {
                    model: m.clone(),
                    last: None,
                    conv: conv.clone(),
                };
                let outcome = tune_bandwidth(&snapshot, &rc.bandwidths, |_, b, mut c: Candidate| {
                    let mut val = None;
                    for t in 0..k {
                        c.last = Some(self.round(&mut c.model, round + t, Some(b), &Cleaning::Robust)?);
                        // Patience is only acted on once the entry is over.
                        val = self.val_rmse(&c.model.state)?;
                        c.conv.observe(val, 1, &c.model.state, round + t + 1);
                    }
                    Ok((c, val.unwrap_or(f64::NAN)))
                })?;
                let val = outcome.scores[outcome.index];
                bandwidth = outcome.bandwidth;
                *conv = outcome.state.conv;
                *m = outcome.state.model;
                let out = outcome.state.last.expect("at least one lookahead round");
                rep.tune_events.push(TuneEvent {
                    round,
                    candidates: rc.bandwidths.clone(),
                    val_rmse: outcome.scores.clone(),
                    chosen: bandwidth,
                    rounds: k,
                });
                rep.overhead_rounds += k * (rc.bandwidths.len() - 1);
                let val = Some(val).filter(|v| v.is_finite());
                done = conv.stale >= conv.patience;
                self.log(rep, round, Phase::Tune, Some(bandwidth), &out, val, t0, k);
                consumed = k;
            } else {
                if decay && on_interval && iteration > 0 {
                    bandwidth = decay_bandwidth(bandwidth, rc.decay.rate)?;
                }
                let out = self.round(m, round, Some(bandwidth), &Cleaning::Robust)?;
                let val = self.val_rmse(&m.state)?;
                done = conv.observe(val, 1, &m.state, round + 1);
                self.log(rep, round, Phase::Step, Some(bandwidth), &out, val, t0, 1);
                consumed = 1;
            }
            round += consumed;
            iteration += 1;
            if done {
                rep.converged = true;
                break;
            }
        }
        Ok(())
    }

    fn finish(&self, m: &mut Model, rep: &mut PipelineReport, conv: Convergence) {
        if self.rc.restore_best {
            if let Some((params, end)) = conv.checkpoint {
                m.state.params = params;
                rep.best_round = Some(end);
            }
        }
    }

    fn run_rcmixup(&self, decay: bool) -> Result<(Model, PipelineReport)> {
        let mode = if decay {
            PipelineMode::RcmixupDecay
        } else {
            PipelineMode::Rcmixup
        };
        let mut rep = PipelineReport::new(mode);
        let mut conv = Convergence::new(self.rc);
        let mut m = self.init_model()?;
        let warm = self.rc.warmup();
        let b0 = self.rc.initial_bandwidth;
        self.warmup(&mut m, &mut rep, &mut conv, 0..warm, Some(b0))?;
        self.rank(&mut m, &mut rep, Some(b0))?;
        self.interleaved(&mut m, &mut rep, &mut conv, warm..self.rc.max_rounds, decay)?;
        self.finish(&mut m, &mut rep, conv);
        Ok((m, rep))
    }

    fn run_robust_only(&self) -> Result<(Model, PipelineReport)> {
        let mut rep = PipelineReport::new(PipelineMode::RobustOnly);
        let mut conv = Convergence::new(self.rc);
        let mut m = self.init_model()?;
        let warm = self.rc.warmup();
        self.warmup(&mut m, &mut rep, &mut conv, 0..warm, None)?;
        self.rank(&mut m, &mut rep, None)?;
        self.fixed(
            &mut m,
            &mut rep,
            &mut conv,
            warm..self.rc.max_rounds,
            None,
            &Cleaning::Robust,
        )?;
        self.finish(&mut m, &mut rep, conv);
        Ok((m, rep))
    }

    fn run_cmixup(&self, bandwidth: f64) -> Result<(Model, PipelineReport)> {
        let mut rep = PipelineReport::new(PipelineMode::CmixupOnly);
        let mut conv = Convergence::new(self.rc);
        let mut m = self.init_model()?;
        self.fixed(
            &mut m,
            &mut rep,
            &mut conv,
            0..self.rc.max_rounds,
            Some(bandwidth),
            &Cleaning::Off,
        )?;
        self.finish(&mut m, &mut rep, conv);
        Ok((m, rep))
    }

    fn run_c_then_r(&self, bandwidth: f64) -> Result<(Model, PipelineReport)> {
        let mut rep = PipelineReport::new(PipelineMode::CThenR);
        let mut conv = Convergence::new(self.rc);
        let mut m = self.init_model()?;
        let half = self.rc.max_rounds / 2;
        let next = self.fixed(&mut m, &mut rep, &mut conv, 0..half, Some(bandwidth), &Cleaning::Off)?;
        rep.converged = false;
        self.rank(&mut m, &mut rep, None)?;
        self.fixed(
            &mut m,
            &mut rep,
            &mut conv,
            next..self.rc.max_rounds,
            None,
            &Cleaning::Robust,
        )?;
        self.finish(&mut m, &mut rep, conv);
        Ok((m, rep))
    }

    fn run_c_then_r_plus_c(&self, bandwidth: f64) -> Result<(Model, PipelineReport)> {
        let mut rep = PipelineReport::new(PipelineMode::CThenRPlusC);
        let mut conv = Convergence::new(self.rc);
        let mut m = self.init_model()?;
        let warm = self.rc.warmup();
        self.warmup(&mut m, &mut rep, &mut conv, 0..warm, Some(bandwidth))?;
        self.rank(&mut m, &mut rep, Some(bandwidth))?;
        self.fixed(
            &mut m,
            &mut rep,
            &mut conv,
            warm..self.rc.max_rounds,
            Some(bandwidth),
            &Cleaning::Robust,
        )?;
        self.finish(&mut m, &mut rep, conv);
        Ok((m, rep))
    }

    /// Robust training for half the budget, then mixing-only training on the
    /// subset the robust phase ended with. Only the second phase depends on
    /// the bandwidth, so the first is shared by every grid point.
    fn run_r_then_c(&self) -> Result<(Model, PipelineReport)> {
        let mut rep = PipelineReport::new(PipelineMode::RThenC);
        let mut conv = Convergence::new(self.rc);
        let mut m = self.init_model()?;
        let half = self.rc.max_rounds / 2;
        let warm = self.rc.warmup().min(half);
        self.warmup(&mut m, &mut rep, &mut conv, 0..warm, None)?;
        self.rank(&mut m, &mut rep, None)?;
        let next = self.fixed(&mut m, &mut rep, &mut conv, warm..half, None, &Cleaning::Robust)?;
        rep.converged = false;
        let picked = self.select(&mut m)?;
        if let Some(sel) = picked.selection {
            m.last_selection = Some(sel.indices);
        }
        let frozen = FixedSet {
            active: picked.active,
            labels: picked.labels,
        };
        let prefix_conv = conv;
        let prefix = rep;
        let shared = (prefix.rounds, prefix.overhead_rounds);
        self.grid(PipelineMode::RThenC, shared, |b| {
            let mut model = m.clone();
            let mut rep = prefix.clone();
            let mut conv = prefix_conv.clone();
            self.fixed(
                &mut model,
                &mut rep,
                &mut conv,
                next..self.rc.max_rounds,
                Some(b),
                &Cleaning::Fixed(&frozen),
            )?;
            self.finish(&mut model, &mut rep, conv);
            Ok((model, rep))
        })
    }

    /// One run per candidate bandwidth; keeps the lowest final validation RMSE.
    /// `shared` is the (rounds, overhead) prefix every run starts from, which
    /// is only paid once.
    fn grid<F>(&self, mode: PipelineMode, shared: (usize, usize), run: F) -> Result<(Model, PipelineReport)>
    where
        F: Fn(f64) -> Result<(Model, PipelineReport)> + Sync,
    {
        use rayon::prelude::*;
        let runs: Vec<Result<(Model, PipelineReport, f64)>> = self
            .rc
            .bandwidths
            .par_iter()
            .map(|&b| {
                let (m, rep) = run(b)?;
                let val = self.val_rmse(&m.state)?.unwrap_or(f64::NAN);
                Ok((m, rep, val))
            })
            .collect();
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        let scores: Vec<f64> = runs.iter().map(|r| r.2).collect();
        let best = pick_lowest(&scores).expect("non-empty candidates");
        let overhead: usize = runs
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != best)
            .map(|(_, r)| (r.1.rounds - shared.0) + (r.1.overhead_rounds - shared.1))
            .sum();
        let grid = self
            .rc
            .bandwidths
            .iter()
            .zip(&scores)
            .map(|(&bandwidth, &val_rmse)| GridPoint { bandwidth, val_rmse })
            .collect();
        let (model, mut rep, _) = runs.into_iter().nth(best).expect("index in range");
        rep.mode = mode;
        rep.grid = grid;
        rep.chosen_bandwidth = Some(self.rc.bandwidths[best]);
        rep.overhead_rounds += overhead;
        Ok((model, rep))
    }
}
