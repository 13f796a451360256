use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mixup::KernelSampler;
use crate::nn::TrainingSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixMode {
    /// Mix raw feature vectors.
    Input,
    /// Mix activations after hidden layer `layer` (1 = first hidden layer).
    Manifold { layer: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixConfig {
    /// Shape of the symmetric `Beta(alpha, alpha)` mixing weight.
    pub alpha: f64,
    pub mode: MixMode,
}

impl MixConfig {
    pub fn input(alpha: f64) -> Self {
        MixConfig {
            alpha,
            mode: MixMode::Input,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("mixup alpha {} must be positive", self.alpha)));
        }
        if let MixMode::Manifold { layer: 0 } = self.mode {
            return Err(Error::invalid("manifold mixing layer must be a hidden layer (>= 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixedSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub source: Option<(usize, usize)>,
    pub lambda: f64,
}

/// `lambda * (x_i, y_i) + (1 - lambda) * (x_j, y_j)`.
pub fn mix_pair(x_i: &[f64], y_i: &[f64], x_j: &[f64], y_j: &[f64], lambda: f64) -> Result<MixedSample> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("mixing weight {lambda} outside [0, 1]")));
    }
    if x_i.len() != x_j.len() || y_i.len() != y_j.len() {
        return Err(Error::DimensionMismatch {
            context: "mixed pair",
            expected: x_i.len() + y_i.len(),
            got: x_j.len() + y_j.len(),
        });
    }
    let blend =
        |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| lambda * u + (1.0 - lambda) * v).collect() };
    Ok(MixedSample {
        x: blend(x_i, x_j),
        y: blend(y_i, y_j),
        source: None,
        lambda,
    })
}

/// Who was mixed with whom in one epoch, in anchor order.
#[derive(Clone, Debug, PartialEq)]
pub struct MixPlan {
    pub anchors: Vec<usize>,
    pub partners: Vec<usize>,
    pub lambdas: Vec<f64>,
}

impl MixPlan {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

/// One mixed example per active anchor. Input mode materializes the mixed
/// features; manifold mode hands the pair and weight to the network so the
/// blend happens at the hidden layer. Targets are always mixed labels.
pub fn cmixup_epoch<R: Rng + ?Sized>(
    x: &Matrix,
    y: &Matrix,
    active: &[usize],
    sampler: &KernelSampler,
    config: &MixConfig,
    rng: &mut R,
) -> Result<(MixPlan, TrainingSet)> {
    config.validate()?;
    let mut sorted = active.to_vec();
    sorted.sort_unstable();
    if sorted != sampler.active() {
        return Err(Error::ActiveSetMismatch);
    }
    let beta = Beta::new(config.alpha, config.alpha).map_err(|e| Error::invalid(e.to_string()))?;
    let mut partners = Vec::with_capacity(active.len());
    let mut lambdas = Vec::with_capacity(active.len());
    for &i in active {
        partners.push(sampler.sample_partner(i, rng)?);
        let lambda: f64 = beta.sample(rng);
        lambdas.push(if lambda.is_finite() {
            lambda.clamp(0.0, 1.0)
        } else {
            0.5
        });
    }

    let e = y.cols();
    let mut targets = Vec::with_capacity(active.len() * e);
    for ((&i, &j), &lambda) in active.iter().zip(&partners).zip(&lambdas) {
        targets.extend(
            y.row(i)
                .iter()
                .zip(y.row(j))
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b),
        );
    }
    let targets = Matrix::from_vec(active.len(), e, targets)?;

    let set = match config.mode {
        MixMode::Input => {
            let d = x.cols();
            let mut inputs = Vec::with_capacity(active.len() * d);
            for ((&i, &j), &lambda) in active.iter().zip(&partners).zip(&lambdas) {
                inputs.extend(
                    x.row(i)
                        .iter()
                        .zip(x.row(j))
                        .map(|(a, b)| lambda * a + (1.0 - lambda) * b),
                );
            }
            TrainingSet::plain(Matrix::from_vec(active.len(), d, inputs)?, targets)?
        }
        MixMode::Manifold { layer } => TrainingSet::hidden_mixed(
            x.select_rows(active),
            x.select_rows(&partners),
            lambdas.clone(),
            layer,
            targets,
        )?,
    };
    let plan = MixPlan {
        anchors: active.to_vec(),
        partners,
        lambdas,
    };
    Ok((plan, set))
}

/// The unmixed training set over `active`.
pub fn plain_epoch(x: &Matrix, y: &Matrix, active: &[usize]) -> Result<TrainingSet> {
    TrainingSet::plain(x.select_rows(active), y.select_rows(active))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixup::{build_label_distances, sampling_probs};
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use std::sync::Arc;

    #[test]
    fn mix_pair_examples() {
        let m = mix_pair(&[0.0, 2.0], &[0.0], &[2.0, 0.0], &[4.0], 0.5).unwrap();
        assert_eq!((m.x, m.y), (vec![1.0, 1.0], vec![2.0]));
        let one = mix_pair(&[1.0], &[2.0], &[3.0], &[4.0], 1.0).unwrap();
        assert_eq!((one.x, one.y), (vec![1.0], vec![2.0]));
        let zero = mix_pair(&[1.0], &[2.0], &[3.0], &[4.0], 0.0).unwrap();
        assert_eq!((zero.x, zero.y), (vec![3.0], vec![4.0]));
        assert!(mix_pair(&[1.0], &[2.0], &[3.0], &[4.0], 1.5).is_err());
    }

    fn fixture() -> (Matrix, Matrix) {
        let y = Matrix::column_vector(&[0.0, 1.0, 3.0, 7.0, 15.0]);
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, 1.0], [4.0, 0.0]]).unwrap();
        (x, y)
    }

    #[test]
    fn one_sample_per_anchor_and_convex_labels() {
        let (x, y) = fixture();
        let d = Arc::new(build_label_distances(&y).unwrap());
        let active = [0, 2, 3, 4];
        let s = sampling_probs(&d, 3.0, &active).unwrap();
        let mut rng = StdRng::seed_from_u64(1);
        let (plan, set) = cmixup_epoch(&x, &y, &active, &s, &MixConfig::input(2.0), &mut rng).unwrap();
        assert_eq!(set.len(), 4);
        for k in 0..plan.len() {
            let (a, b) = (y.get(plan.anchors[k], 0), y.get(plan.partners[k], 0));
            let t = set.targets().get(k, 0);
            assert!(t >= a.min(b) - 1e-12 && t <= a.max(b) + 1e-12);
            assert!(active.contains(&plan.partners[k]));
        }
    }

    #[test]
    fn active_set_must_match_sampler() {
        let (x, y) = fixture();
        let d = Arc::new(build_label_distances(&y).unwrap());
        let s = sampling_probs(&d, 3.0, &[0, 1, 2]).unwrap();
        let r = cmixup_epoch(
            &x,
            &y,
            &[0, 1],
            &s,
            &MixConfig::input(2.0),
            &mut StdRng::seed_from_u64(0),
        );
        assert!(matches!(r, Err(Error::ActiveSetMismatch)));
    }

    #[test]
    fn manifold_mode_keeps_raw_inputs() {
        let (x, y) = fixture();
        let d = Arc::new(build_label_distances(&y).unwrap());
        let all = [0, 1, 2, 3, 4];
        let s = sampling_probs(&d, 3.0, &all).unwrap();
        let cfg = MixConfig {
            alpha: 0.5,
            mode: MixMode::Manifold { layer: 1 },
        };
        let (_, set) = cmixup_epoch(&x, &y, &all, &s, &cfg, &mut StdRng::seed_from_u64(0)).unwrap();
        assert_eq!(set.inputs(), &x);
    }
}
