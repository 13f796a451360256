use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A smooth, noise-free target: `y_k = <a_k, x> + c_k * sin(<w_k, x> + phi_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthTarget {
    /// e x d linear weights.
    pub linear: Matrix,
    /// e x d frequencies inside the sinusoid.
    pub frequency: Matrix,
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
}

impl SynthTarget {
    pub fn random(d: usize, e: usize, rng: &mut StdRng) -> Self {
        let scale = 1.0 / (d as f64).sqrt();
        let mut draw =
            |lo: f64, hi: f64, len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(lo..hi)).collect() };
        let linear = draw(-scale, scale, e * d);
        let frequency = draw(-2.0 * scale, 2.0 * scale, e * d);
        let amplitude = draw(0.5, 1.0, e);
        let phase = draw(0.0, std::f64::consts::TAU, e);
        SynthTarget {
            linear: Matrix::from_vec(e, d, linear).expect("sized above"),
            frequency: Matrix::from_vec(e, d, frequency).expect("sized above"),
            amplitude,
            phase,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.linear.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.linear.rows()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "synthetic target input",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let dot = |w: &[f64]| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        Ok((0..self.output_dim())
            .map(|k| dot(self.linear.row(k)) + self.amplitude[k] * (dot(self.frequency.row(k)) + self.phase[k]).sin())
            .collect())
    }
}

/// Draws `x ~ U[-1, 1]^d` and labels from a seeded [`SynthTarget`].
pub fn synth_regression(n: usize, d: usize, e: usize, seed: u64) -> Result<(Dataset, SynthTarget)> {
    if n == 0 || d == 0 || e == 0 {
        return Err(Error::invalid(format!(
            "synthetic shape ({n}, {d}, {e}) must be positive"
        )));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let target = SynthTarget::random(d, e, &mut rng);
    let xs: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let x = Matrix::from_vec(n, d, xs)?;
    let mut ys = Vec::with_capacity(n * e);
    for row in x.iter_rows() {
        ys.extend(target.evaluate(row)?);
    }
    let y = Matrix::from_vec(n, e, ys)?;
    Ok((Dataset::new(x, y, format!("synthetic:{n}x{d}x{e}:seed{seed}"))?, target))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let (a, _) = synth_regression(30, 4, 2, 9).unwrap();
        let (b, _) = synth_regression(30, 4, 2, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.len(), a.feature_dim(), a.label_dim()), (30, 4, 2));
        assert_ne!(a, synth_regression(30, 4, 2, 10).unwrap().0);
    }

    #[test]
    fn labels_equal_target() {
        let (ds, target) = synth_regression(20, 3, 3, 1).unwrap();
        for i in 0..ds.len() {
            assert_eq!(target.evaluate(ds.x.row(i)).unwrap(), ds.y.row(i));
        }
        assert!(ds.x.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn rejects_empty_shape() {
        assert!(synth_regression(0, 1, 1, 0).is_err());
    }
}
