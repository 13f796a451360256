use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::adam::{AdamConfig, AdamState};
use crate::nn::backprop::{accumulate_batch, Example, HiddenMix, Scratch};
use crate::nn::model::{init_params, ModelSpec, Params};

/// Model parameters together with their optimizer state. Cloning yields an
/// independent snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub params: Params,
    pub optimizer: AdamState,
}

/// Examples for one epoch: either plain rows or rows paired with a partner
/// that is blended at a hidden layer.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    inputs: Matrix,
    targets: Matrix,
    hidden: Option<HiddenPartners>,
}

#[derive(Clone, Debug, PartialEq)]
struct HiddenPartners {
    partners: Matrix,
    lambdas: Vec<f64>,
    layer: usize,
}

impl TrainingSet {
    pub fn plain(inputs: Matrix, targets: Matrix) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::DimensionMismatch {
                context: "training set rows",
                expected: inputs.rows(),
                got: targets.rows(),
            });
        }
        Ok(Self {
            inputs,
            targets,
            hidden: None,
        })
    }

    pub fn hidden_mixed(
        inputs: Matrix,
        partners: Matrix,
        lambdas: Vec<f64>,
        layer: usize,
        targets: Matrix,
    ) -> Result<Self> {
        let n = inputs.rows();
        for (context, got) in [
            ("partner rows", partners.rows()),
            ("mixing weights", lambdas.len()),
            ("training set rows", targets.rows()),
        ] {
            if got != n {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: n,
                    got,
                });
            }
        }
        Ok(Self {
            inputs,
            targets,
            hidden: Some(HiddenPartners {
                partners,
                lambdas,
                layer,
            }),
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn targets(&self) -> &Matrix {
        &self.targets
    }

    pub fn example(&self, k: usize) -> Example<'_> {
        Example {
            input: self.inputs.row(k),
            target: self.targets.row(k),
            mix: self.hidden.as_ref().map(|h| HiddenMix {
                partner: h.partners.row(k),
                lambda: h.lambdas[k],
                layer: h.layer,
            }),
        }
    }
}

/// Shuffled partition of `0..n` into consecutive batches; the last may be short.
pub fn epoch_batches<R: Rng + ?Sized>(n: usize, batch_size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

impl TrainState {
    pub fn new(spec: &ModelSpec, seed: u64, optimizer: AdamConfig) -> Result<Self> {
        let params = init_params(spec, seed)?;
        let len = params.len();
        Ok(Self {
            params,
            optimizer: AdamState::new(optimizer, len),
        })
    }

    /// One Adam step on the mean batch loss. Returns the loss before the step.
    pub fn grad_and_step(&mut self, batch: &[Example]) -> Result<f64> {
        let mut scratch = Scratch::new(&self.params);
        let mut grads = vec![0.0; self.params.len()];
        self.step_with(batch, &mut grads, &mut scratch)
    }

    fn step_with(&mut self, batch: &[Example], grads: &mut [f64], scratch: &mut Scratch) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        grads.iter_mut().for_each(|g| *g = 0.0);
        let loss = accumulate_batch(&self.params, batch, grads, scratch)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                loss,
                step: self.optimizer.step_count() + 1,
            });
        }
        self.optimizer.apply(self.params.as_mut_slice(), grads);
        Ok(loss)
    }

    /// One pass over `set` in shuffled mini-batches. Returns the mean batch loss.
    pub fn train_epoch<R: Rng + ?Sized>(&mut self, set: &TrainingSet, batch_size: usize, rng: &mut R) -> Result<f64> {
        if set.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let batches = epoch_batches(set.len(), batch_size, rng);
        let mut scratch = Scratch::new(&self.params);
        let mut grads = vec![0.0; self.params.len()];
        let mut examples = Vec::with_capacity(batch_size);
        let mut total = 0.0;
        for batch in &batches {
            examples.clear();
            examples.extend(batch.iter().map(|&k| set.example(k)));
            total += self.step_with(&examples, &mut grads, &mut scratch)?;
        }
        Ok(total / batches.len() as f64)
    }
}

pub fn predict(params: &Params, x: &Matrix) -> Result<Matrix> {
    params.predict_matrix(x)
}

/// Per-row loss: mean over output dimensions of the squared error.
pub fn per_sample_losses(params: &Params, x: &Matrix, y: &Matrix) -> Result<Vec<f64>> {
    if x.rows() == 0 {
        return Err(Error::Empty("dataset"));
    }
    if y.rows() != x.rows() || y.cols() != params.spec().output_dim {
        return Err(Error::DimensionMismatch {
            context: "labels",
            expected: params.spec().output_dim,
            got: y.cols(),
        });
    }
    let pred = params.predict_matrix(x)?;
    Ok(row_losses(&pred, y))
}

pub(crate) fn row_losses(pred: &Matrix, y: &Matrix) -> Vec<f64> {
    let e = y.cols() as f64;
    (0..y.rows())
        .map(|i| {
            pred.row(i)
                .iter()
                .zip(y.row(i))
                .map(|(p, t)| (p - t) * (p - t))
                .sum::<f64>()
                / e
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn losses_are_mean_over_dims() {
        let spec = ModelSpec::new(1, vec![2], 2).unwrap();
        let params = Params::zeros(&spec).unwrap();
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        // predictions are zero: (0-0)^2, and ((0-2)^2 + (0-0)^2)/2
        let y = Matrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(per_sample_losses(&params, &x, &y).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn single_dim_squared_error() {
        let spec = ModelSpec::new(1, vec![1], 1).unwrap();
        let mut params = Params::zeros(&spec).unwrap();
        params.bias_mut(1)[0] = 2.0;
        let x = Matrix::from_rows(&[vec![0.0]]).unwrap();
        let y = Matrix::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(per_sample_losses(&params, &x, &y).unwrap(), vec![4.0]);
    }

    #[test]
    fn two_dim_mean() {
        let spec = ModelSpec::new(1, vec![1], 2).unwrap();
        let mut params = Params::zeros(&spec).unwrap();
        params.bias_mut(1).copy_from_slice(&[1.0, 1.0]);
        let x = Matrix::from_rows(&[vec![0.0]]).unwrap();
        let y = Matrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!(per_sample_losses(&params, &x, &y).unwrap(), vec![1.0]);
    }

    #[test]
    fn batches_partition_the_epoch() {
        let mut rng = StdRng::seed_from_u64(9);
        let batches = epoch_batches(23, 5, &mut rng);
        assert_eq!(batches.len(), 5);
        assert_eq!(batches.last().unwrap().len(), 3);
        let mut all: Vec<usize> = batches.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
    }

    #[test]
    fn zero_gradient_batch_is_a_no_op() {
        let spec = ModelSpec::new(2, vec![3], 1).unwrap();
        let mut state = TrainState::new(&spec, 1, AdamConfig::with_learning_rate(0.1)).unwrap();
        let x = [0.4, -0.2];
        let target = state.params.forward(&x).unwrap();
        let before = state.params.clone();
        state.grad_and_step(&[Example::plain(&x, &target)]).unwrap();
        assert_eq!(state.params.as_slice(), before.as_slice());
        assert_eq!(state.optimizer.step_count(), 1);
    }

    #[test]
    fn non_finite_loss_aborts() {
        let spec = ModelSpec::new(1, vec![1], 1).unwrap();
        let mut state = TrainState::new(&spec, 1, AdamConfig::default()).unwrap();
        let x = [1.0];
        let t = [f64::NAN];
        let err = state.grad_and_step(&[Example::plain(&x, &t)]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { step: 1, .. }));
    }
}
