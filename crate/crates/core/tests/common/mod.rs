//! Oracles shared by the oracle test files and the acceptance target.
#![allow(dead_code)]

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rcmixup::matrix::Matrix;
use rcmixup::mixup::{build_label_distances, sampling_probs};
use rcmixup::nn::{batch_loss, gradient, init_params, Example, HiddenMix, ModelSpec};
use rcmixup::robust::itlm_select;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Largest relative error between the analytic gradient and central
/// differences for one random network and batch.
pub fn gradient_check(seed: u64, h: f64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let d = rng.random_range(1..=5);
    let e = rng.random_range(1..=3);
    let hidden: Vec<usize> = (0..rng.random_range(1..=3)).map(|_| rng.random_range(2..=6)).collect();
    let spec = ModelSpec::new(d, hidden.clone(), e).unwrap();
    let mut params = init_params(&spec, seed).unwrap();
    // Fresh biases are exactly zero, which puts dead units on the ReLU kink
    // where the loss has no derivative. Jitter every parameter off it.
    for v in params.as_mut_slice() {
        *v += rng.random_range(-0.5..0.5);
    }
    let batch_size = rng.random_range(1..=4);
    let inputs: Vec<Vec<f64>> = (0..batch_size)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let targets: Vec<Vec<f64>> = (0..batch_size)
        .map(|_| (0..e).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    // Half the batches mix a partner in at a random hidden layer.
    let mixed = seed % 2 == 1;
    let partners: Vec<Vec<f64>> = (0..batch_size)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let lambdas: Vec<f64> = (0..batch_size).map(|_| rng.random_range(0.0..1.0)).collect();
    let layer = rng.random_range(1..=hidden.len());
    let batch: Vec<Example> = (0..batch_size)
        .map(|k| Example {
            input: &inputs[k],
            target: &targets[k],
            mix: mixed.then(|| HiddenMix {
                partner: &partners[k],
                lambda: lambdas[k],
                layer,
            }),
        })
        .collect();

    let (_, analytic) = gradient(&params, &batch).unwrap();
    let mut worst: f64 = 0.0;
    for (p, &grad) in analytic.iter().enumerate() {
        let orig = params.as_slice()[p];
        params.as_mut_slice()[p] = orig + h;
        let up = batch_loss(&params, &batch).unwrap();
        params.as_mut_slice()[p] = orig - h;
        let down = batch_loss(&params, &batch).unwrap();
        params.as_mut_slice()[p] = orig;
        let numeric = (up - down) / (2.0 * h);
        let scale = grad.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((grad - numeric).abs() / scale);
    }
    worst
}

/// Six scalar labels with distinct gaps.
pub fn six_labels() -> Matrix {
    Matrix::column_vector(&[0.0, 0.3, 1.0, 1.2, 2.5, 4.0])
}

/// The sampling distribution written out directly: proportional to
/// exp(-d / b^2) over every other index, with d the squared label gap.
pub fn reference_probs(labels: &[f64], b: f64, i: usize) -> Vec<f64> {
    let w: Vec<f64> = labels
        .iter()
        .enumerate()
        .map(|(j, &y)| {
            if j == i {
                0.0
            } else {
                (-(labels[i] - y).powi(2) / (b * b)).exp()
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Pearson chi-square p-value of `draws` partner draws for each anchor,
/// against [`reference_probs`]. Returns the smallest p over anchors.
pub fn sampler_min_p(b: f64, draws: usize, seed: u64) -> f64 {
    let y = six_labels();
    let labels = y.column(0);
    let sampler = sampling_probs(&Arc::new(build_label_distances(&y).unwrap()), b, &[0, 1, 2, 3, 4, 5]).unwrap();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut min_p: f64 = 1.0;
    for i in 0..labels.len() {
        let expected = reference_probs(&labels, b, i);
        let mut counts = vec![0usize; labels.len()];
        for _ in 0..draws {
            counts[sampler.sample_partner(i, &mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[i], 0, "anchor drew itself");
        let mut stat = 0.0;
        let mut cells = 0;
        for (j, &c) in counts.iter().enumerate() {
            if j == i {
                continue;
            }
            let e = expected[j] * draws as f64;
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        }
        let p = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat);
        min_p = min_p.min(p);
    }
    min_p
}

/// Minimum-sum subset of size `k` by enumeration; ties resolved toward
/// the lexicographically smallest index set.
pub fn brute_force_trim(losses: &[f64], k: usize) -> Vec<usize> {
    let n = losses.len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let set: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let sum: f64 = set.iter().map(|&i| losses[i]).sum();
        let better = match &best {
            None => true,
            Some((s, b)) => sum < *s || (sum == *s && set < *b),
        };
        if better {
            best = Some((sum, set));
        }
    }
    best.map(|(_, s)| s).unwrap_or_default()
}

/// Runs `trials` random ITLM-vs-enumeration comparisons; returns the number
/// of disagreements (loss sums compared, since equal losses admit several
/// optimal sets).
pub fn itlm_disagreements(trials: usize, seed: u64) -> usize {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..trials {
        let n = rng.random_range(1..=12);
        // Coarse values so that ties actually occur.
        let losses: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 * 0.25).collect();
        let tau = rng.random_range(1..=20) as f64 / 20.0;
        let k = ((tau * n as f64) + 1e-9).floor() as usize;
        let got = itlm_select(&losses, tau).unwrap().indices;
        let want = brute_force_trim(&losses, k);
        let sum = |s: &[usize]| s.iter().map(|&i| losses[i]).sum::<f64>();
        if got.len() != k || (sum(&got) - sum(&want)).abs() > 1e-12 {
            bad += 1;
        }
    }
    bad
}
