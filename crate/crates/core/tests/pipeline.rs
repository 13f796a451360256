use std::sync::Arc;

use rand::rngs::StdRng;
use rand::SeedableRng;
use rcmixup::data::{inject_noise, synth_regression, Dataset, NoiseKind, NoiseRecord, NoiseSpec};
use rcmixup::matrix::Matrix;
use rcmixup::mixup::{build_label_distances, KernelCache, MixConfig, MixMode};
use rcmixup::nn::{gradient, per_sample_losses, AdamConfig, AdamState, Example, ModelSpec, TrainState};
use rcmixup::pipeline::{
    rc_round, run_pipeline, tune_bandwidth, DecayConfig, Phase, PipelineMode, RCConfig, RobustBackend, TrainerConfig,
};
use serde_json::Value;

struct Fixture {
    train: Dataset,
    validation: Dataset,
    noise: NoiseRecord,
}

fn fixture(seed: u64) -> Fixture {
    let (pool, _) = synth_regression(120, 3, 1, 40 + seed).unwrap();
    let train = pool.subset(&(0..80).collect::<Vec<_>>()).unwrap();
    let validation = pool.subset(&(80..120).collect::<Vec<_>>()).unwrap();
    let spec = NoiseSpec {
        kind: NoiseKind::Gaussian,
        rate: 0.3,
        magnitude: 2.0,
        seed,
    };
    let (train, noise) = inject_noise(&train, &spec).unwrap();
    Fixture {
        train,
        validation,
        noise,
    }
}

fn rc() -> RCConfig {
    RCConfig {
        bandwidths: vec![0.1, 1.0, 10.0],
        update_interval: 3,
        lookahead: 2,
        tau: 0.7,
        alpha: 2.0,
        initial_bandwidth: 1.0,
        warmup_rounds: Some(2),
        max_rounds: 17,
        patience: 1000,
        ..RCConfig::default()
    }
}

fn trainer() -> TrainerConfig {
    TrainerConfig {
        hidden_dims: vec![16],
        learning_rate: 1e-2,
        batch_size: 16,
        mix_mode: MixMode::Input,
    }
}

fn run(mode: PipelineMode, rc: &RCConfig, f: &Fixture, seed: u64) -> rcmixup::pipeline::PipelineOutcome {
    run_pipeline(
        mode,
        rc,
        &trainer(),
        &RobustBackend::Itlm,
        &f.train,
        Some(&f.validation),
        Some(&f.noise),
        seed,
    )
    .unwrap()
}

fn without_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.retain(|k, _| k != "wall_ms");
            m.values_mut().for_each(without_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(without_timing),
        _ => {}
    }
}

#[test]
fn rcmixup_phase_sequence_and_round_accounting() {
    let f = fixture(0);
    let cfg = rc();
    let out = run(PipelineMode::Rcmixup, &cfg, &f, 3);
    let phases = out.report.phases();
    assert_eq!(&phases[..2], &[Phase::Warmup, Phase::Warmup]);
    // After warm-up: (tune step^{L-1})*, possibly cut short by the budget.
    for (k, p) in phases[2..].iter().enumerate() {
        let want = if k % cfg.update_interval == 0 {
            Phase::Tune
        } else {
            Phase::Step
        };
        assert_eq!(*p, want, "log {k} after warm-up");
    }
    let consumed: usize = out.report.logs.iter().map(|l| l.rounds_consumed).sum();
    assert_eq!(consumed, out.report.rounds);
    assert_eq!(out.report.rounds, cfg.max_rounds);
    let tune_rounds: usize = out.report.tune_events.iter().map(|t| t.rounds).sum();
    assert_eq!(out.report.overhead_rounds, tune_rounds * (cfg.bandwidths.len() - 1));
    for event in &out.report.tune_events {
        assert!(cfg.bandwidths.contains(&event.chosen));
        assert_eq!(event.val_rmse.len(), cfg.bandwidths.len());
    }
    // Rounds are numbered consecutively.
    let mut next = 0;
    for log in &out.report.logs {
        assert_eq!(log.round, next);
        next += log.rounds_consumed;
    }
}

#[test]
fn decay_mode_shrinks_geometrically() {
    let f = fixture(1);
    let cfg = RCConfig {
        decay: DecayConfig {
            enabled: true,
            rate: 0.2,
        },
        initial_bandwidth: 5.0,
        ..rc()
    };
    let out = run(PipelineMode::RcmixupDecay, &cfg, &f, 1);
    assert!(out.report.tune_events.is_empty());
    assert_eq!(out.report.overhead_rounds, 0);
    let timeline = out.report.bandwidth_timeline();
    assert!(timeline.len() >= 3);
    for (k, &(_, b)) in timeline.iter().enumerate() {
        let want = 5.0 * 0.8f64.powi(k as i32);
        assert!((b - want).abs() < 1e-12 * want, "step {k}: {b} vs {want}");
    }
}

#[test]
fn cmixup_never_cleans() {
    let f = fixture(2);
    let out = run(PipelineMode::CmixupOnly, &rc(), &f, 2);
    assert!(out.report.logs.iter().all(|l| l.clean_size == f.train.len()));
    assert_eq!(out.report.grid.len(), 3);
    assert!(rc().bandwidths.contains(&out.report.chosen_bandwidth.unwrap()));
}

#[test]
fn rcmixup_without_trimming_or_choice_is_cmixup() {
    let f = fixture(3);
    let cfg = RCConfig {
        bandwidths: vec![0.7],
        initial_bandwidth: 0.7,
        tau: 1.0,
        ..rc()
    };
    let a = run(PipelineMode::Rcmixup, &cfg, &f, 9);
    let b = run(PipelineMode::CmixupOnly, &cfg, &f, 9);
    assert_eq!(a.state.params, b.state.params);
    assert_eq!(a.report.rounds, b.report.rounds);
}

#[test]
fn robust_only_without_trimming_is_plain_training() {
    // With tau = 1 the warm-up and robust phases are the same ERM epoch, so
    // where the phase boundary sits cannot matter.
    let f = fixture(4);
    let short = RCConfig {
        tau: 1.0,
        warmup_rounds: Some(1),
        ..rc()
    };
    let long = RCConfig {
        warmup_rounds: Some(6),
        ..short.clone()
    };
    let a = run(PipelineMode::RobustOnly, &short, &f, 5);
    let b = run(PipelineMode::RobustOnly, &long, &f, 5);
    assert_eq!(a.state.params, b.state.params);
    assert!(a.report.logs.iter().all(|l| l.clean_size == f.train.len()));
}

#[test]
fn runs_are_reproducible() {
    let f = fixture(5);
    for mode in PipelineMode::ALL {
        let cfg = RCConfig {
            decay: DecayConfig {
                enabled: mode == PipelineMode::RcmixupDecay,
                ..DecayConfig::default()
            },
            ..rc()
        };
        let a = run(mode, &cfg, &f, 11);
        let b = run(mode, &cfg, &f, 11);
        assert_eq!(a.state.params, b.state.params, "{mode}");
        let mut ja = serde_json::to_value(&a.report).unwrap();
        let mut jb = serde_json::to_value(&b.report).unwrap();
        without_timing(&mut ja);
        without_timing(&mut jb);
        assert_eq!(ja, jb, "{mode}");
    }
}

#[test]
fn every_mode_stays_within_budget() {
    let f = fixture(6);
    for mode in PipelineMode::ALL {
        let cfg = RCConfig {
            decay: DecayConfig {
                enabled: mode == PipelineMode::RcmixupDecay,
                ..DecayConfig::default()
            },
            ..rc()
        };
        let out = run(mode, &cfg, &f, 2);
        assert!(out.report.rounds <= cfg.max_rounds, "{mode}");
        assert!(out.state.params.is_finite(), "{mode}");
        assert_eq!(out.report.mode, mode);
    }
}

#[test]
fn tuning_leaves_the_snapshot_untouched() {
    let f = fixture(7);
    let spec = ModelSpec::new(3, vec![8], 1).unwrap();
    let snapshot = TrainState::new(&spec, 1, AdamConfig::with_learning_rate(1e-2)).unwrap();
    let before = snapshot.params.clone();
    let cache = KernelCache::new(Arc::new(build_label_distances(&f.train.y).unwrap()));
    let mix = MixConfig::input(2.0);
    let outcome = tune_bandwidth(&snapshot, &[0.1, 1.0, 10.0], |k, b, mut state: TrainState| {
        let mut rng = StdRng::seed_from_u64(k as u64);
        for _ in 0..3 {
            rc_round(&mut state, &f.train.x, &f.train.y, &cache, b, 0.7, &mix, 16, &mut rng)?;
        }
        let losses = per_sample_losses(&state.params, &f.validation.x, &f.validation.y)?;
        Ok((state, losses.iter().sum::<f64>()))
    })
    .unwrap();
    assert_eq!(snapshot.params, before);
    assert_ne!(outcome.state.params, before);
    assert_eq!(outcome.scores.len(), 3);
}

#[test]
fn rc_round_hand_trace() {
    // f(x) = relu(x) through a 1-1-1 network with unit weights and zero biases.
    let spec = ModelSpec::new(1, vec![1], 1).unwrap();
    let mut state = TrainState::new(&spec, 0, AdamConfig::with_learning_rate(0.01)).unwrap();
    state.params.as_mut_slice().copy_from_slice(&[1.0, 0.0, 1.0, 0.0]);
    let x = Matrix::column_vector(&[1.0, 2.0, 3.0, 4.0, 5.0]);
    let y = Matrix::column_vector(&[1.0, 2.0, 30.0, 4.0, -5.0]);
    // Squared errors 0, 0, 729, 0, 100: keeping 60% drops rows 2 and 4.
    let cache = KernelCache::new(Arc::new(build_label_distances(&y).unwrap()));
    let mix = MixConfig::input(2.0);
    let mut rng = StdRng::seed_from_u64(8);
    let start = state.params.clone();
    let (selection, plan, _) = rc_round(&mut state, &x, &y, &cache, 1.0, 0.6, &mix, 8, &mut rng).unwrap();
    assert_eq!(selection.losses, vec![0.0, 0.0, 729.0, 0.0, 100.0]);
    assert_eq!(selection.indices, vec![0, 1, 3]);
    assert_eq!(plan.anchors, vec![0, 1, 3]);
    for (&a, &p) in plan.anchors.iter().zip(&plan.partners) {
        assert!(p != a && selection.contains(p));
    }

    // Replay the single Adam step on the mixed examples.
    let mixed: Vec<([f64; 1], [f64; 1])> = plan
        .anchors
        .iter()
        .zip(&plan.partners)
        .zip(&plan.lambdas)
        .map(|((&i, &j), &l)| {
            (
                [l * x.get(i, 0) + (1.0 - l) * x.get(j, 0)],
                [l * y.get(i, 0) + (1.0 - l) * y.get(j, 0)],
            )
        })
        .collect();
    let batch: Vec<Example> = mixed.iter().map(|(xi, yi)| Example::plain(xi, yi)).collect();
    let (_, grads) = gradient(&start, &batch).unwrap();
    let mut expected = start.clone();
    AdamState::new(AdamConfig::with_learning_rate(0.01), expected.len()).apply(expected.as_mut_slice(), &grads);
    for (got, want) in state.params.as_slice().iter().zip(expected.as_slice()) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}
