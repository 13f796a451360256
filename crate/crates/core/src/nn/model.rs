use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

/// Architecture of a feed-forward regressor: `input -> hidden... -> output`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
}

impl ModelSpec {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, output_dim: usize) -> Result<Self> {
        let spec = Self {
            input_dim,
            hidden_dims,
            output_dim,
            activation: Activation::Relu,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// One hidden layer of 128 ReLU units.
    pub fn fcn3(input_dim: usize, output_dim: usize) -> Result<Self> {
        Self::new(input_dim, vec![128], output_dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dims.is_empty() {
            return Err(Error::InvalidSpec("at least one hidden layer is required".into()));
        }
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::InvalidSpec("all layer widths must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of weight layers.
    pub fn depth(&self) -> usize {
        self.hidden_dims.len() + 1
    }

    /// Widths of every level, input first and output last.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.depth() + 1);
        w.push(self.input_dim);
        w.extend_from_slice(&self.hidden_dims);
        w.push(self.output_dim);
        w
    }

    pub fn param_count(&self) -> usize {
        self.widths().windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct LayerLayout {
    inputs: usize,
    outputs: usize,
    weights: usize,
    bias: usize,
}

/// Network parameters. Layer `k` maps level `k` to level `k + 1`; its weights
/// are stored row-major as `outputs x inputs`, followed by the bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    spec: ModelSpec,
    layout: Vec<LayerLayout>,
    values: Vec<f64>,
}

/// Pre- and post-activation values of every layer for one input.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

/// Fan-in scaled uniform initialization (`U(-sqrt(6/fan_in), sqrt(6/fan_in))`)
/// with zero biases.
pub fn init_params(spec: &ModelSpec, seed: u64) -> Result<Params> {
    let mut params = Params::zeros(spec)?;
    let mut rng = StdRng::seed_from_u64(seed);
    for k in 0..spec.depth() {
        let bound = (6.0 / params.layout[k].inputs as f64).sqrt();
        for w in params.weights_mut(k) {
            *w = rng.random_range(-bound..bound);
        }
    }
    Ok(params)
}

impl Params {
    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let widths = spec.widths();
        let mut layout = Vec::with_capacity(spec.depth());
        let mut offset = 0;
        for pair in widths.windows(2) {
            let (inputs, outputs) = (pair[0], pair[1]);
            layout.push(LayerLayout {
                inputs,
                outputs,
                weights: offset,
                bias: offset + inputs * outputs,
            });
            offset += inputs * outputs + outputs;
        }
        Ok(Self {
            spec: spec.clone(),
            layout,
            values: vec![0.0; offset],
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn depth(&self) -> usize {
        self.layout.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(outputs, inputs)` of layer `k`.
    pub fn layer_shape(&self, k: usize) -> (usize, usize) {
        (self.layout[k].outputs, self.layout[k].inputs)
    }

    pub fn weights(&self, k: usize) -> &[f64] {
        let l = self.layout[k];
        &self.values[l.weights..l.bias]
    }

    pub fn weights_mut(&mut self, k: usize) -> &mut [f64] {
        let l = self.layout[k];
        &mut self.values[l.weights..l.bias]
    }

    pub fn bias(&self, k: usize) -> &[f64] {
        let l = self.layout[k];
        &self.values[l.bias..l.bias + l.outputs]
    }

    pub fn bias_mut(&mut self, k: usize) -> &mut [f64] {
        let l = self.layout[k];
        &mut self.values[l.bias..l.bias + l.outputs]
    }

    pub(crate) fn weight_offset(&self, k: usize) -> usize {
        self.layout[k].weights
    }

    pub(crate) fn bias_offset(&self, k: usize) -> usize {
        self.layout[k].bias
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `out = W_k * input + b_k`.
    #[inline]
    pub(crate) fn affine(&self, k: usize, input: &[f64], out: &mut [f64]) {
        let l = self.layout[k];
        let w = &self.values[l.weights..l.bias];
        let b = &self.values[l.bias..l.bias + l.outputs];
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &w[o * l.inputs..(o + 1) * l.inputs];
            let mut acc = b[o];
            for (wi, xi) in row.iter().zip(input) {
                acc += wi * xi;
            }
            *slot = acc;
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.input_dim {
            return Err(Error::DimensionMismatch {
                context: "model input",
                expected: self.spec.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut current = x.to_vec();
        for k in 0..self.depth() {
            let mut next = vec![0.0; self.layout[k].outputs];
            self.affine(k, &current, &mut next);
            if k + 1 < self.depth() {
                relu_in_place(&mut next);
            }
            current = next;
        }
        Ok(current)
    }

    pub fn forward_traced(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardTrace)> {
        self.check_input(x)?;
        let mut pre = Vec::with_capacity(self.depth());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.depth());
        for k in 0..self.depth() {
            let input = if k == 0 { x } else { &post[k - 1] };
            let mut z = vec![0.0; self.layout[k].outputs];
            self.affine(k, input, &mut z);
            let mut a = z.clone();
            if k + 1 < self.depth() {
                relu_in_place(&mut a);
            }
            pre.push(z);
            post.push(a);
        }
        let out = post.last().cloned().unwrap_or_default();
        Ok((out, ForwardTrace { pre, post }))
    }

    /// Forward pass that blends the activations of two inputs at level
    /// `mix_layer` (0 = raw input, `k` = output of the k-th hidden layer) as
    /// `lambda * h_i + (1 - lambda) * h_j`, then continues with the blend.
    pub fn forward_mixed_hidden(&self, x_i: &[f64], x_j: &[f64], lambda: f64, mix_layer: usize) -> Result<Vec<f64>> {
        self.check_input(x_i)?;
        self.check_input(x_j)?;
        if mix_layer >= self.depth() {
            return Err(Error::invalid(format!(
                "mix layer {mix_layer} must be below the network depth {}",
                self.depth()
            )));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid(format!("mixing weight {lambda} outside [0, 1]")));
        }
        let hi = self.forward_to_level(x_i, mix_layer);
        let hj = self.forward_to_level(x_j, mix_layer);
        let mut current: Vec<f64> = hi
            .iter()
            .zip(&hj)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        for k in mix_layer..self.depth() {
            let mut next = vec![0.0; self.layout[k].outputs];
            self.affine(k, &current, &mut next);
            if k + 1 < self.depth() {
                relu_in_place(&mut next);
            }
            current = next;
        }
        Ok(current)
    }

    fn forward_to_level(&self, x: &[f64], level: usize) -> Vec<f64> {
        let mut current = x.to_vec();
        for k in 0..level {
            let mut next = vec![0.0; self.layout[k].outputs];
            self.affine(k, &current, &mut next);
            relu_in_place(&mut next);
            current = next;
        }
        current
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.spec.input_dim {
            return Err(Error::DimensionMismatch {
                context: "model input",
                expected: self.spec.input_dim,
                got: x.cols(),
            });
        }
        let mut out = Matrix::zeros(x.rows(), self.spec.output_dim);
        let max_width = self.spec.widths().into_iter().max().unwrap_or(0);
        let mut a = vec![0.0; max_width];
        let mut b = vec![0.0; max_width];
        for i in 0..x.rows() {
            let row = x.row(i);
            a[..row.len()].copy_from_slice(row);
            let mut width = row.len();
            for k in 0..self.depth() {
                let outputs = self.layout[k].outputs;
                self.affine(k, &a[..width], &mut b[..outputs]);
                if k + 1 < self.depth() {
                    relu_in_place(&mut b[..outputs]);
                }
                std::mem::swap(&mut a, &mut b);
                width = outputs;
            }
            out.row_mut(i).copy_from_slice(&a[..width]);
        }
        Ok(out)
    }
}

#[inline]
pub(crate) fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_net() -> Params {
        // 1-1-1: W1 = 1, b1 = 0, W2 = 3, b2 = 1
        let spec = ModelSpec::new(1, vec![1], 1).unwrap();
        let mut p = Params::zeros(&spec).unwrap();
        p.weights_mut(0)[0] = 1.0;
        p.weights_mut(1)[0] = 3.0;
        p.bias_mut(1)[0] = 1.0;
        p
    }

    #[test]
    fn init_shapes_match_spec() {
        let spec = ModelSpec::new(5, vec![128], 1).unwrap();
        let p = init_params(&spec, 0).unwrap();
        assert_eq!(p.layer_shape(0), (128, 5));
        assert_eq!(p.layer_shape(1), (1, 128));
        assert_eq!(p.weights(0).len(), 5 * 128);
        assert_eq!(p.bias(0).len(), 128);
        assert_eq!(p.weights(1).len(), 128);
        assert_eq!(p.bias(1).len(), 1);
        assert!(p.bias(0).iter().all(|&b| b == 0.0));
        assert_eq!(p.len(), spec.param_count());
    }

    #[test]
    fn init_is_seeded() {
        let spec = ModelSpec::new(5, vec![128], 1).unwrap();
        let a = init_params(&spec, 0).unwrap();
        let b = init_params(&spec, 0).unwrap();
        let c = init_params(&spec, 1).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        assert_ne!(a.as_slice(), c.as_slice());
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::new(3, vec![], 1).is_err());
        assert!(ModelSpec::new(0, vec![4], 1).is_err());
        assert!(ModelSpec::new(3, vec![4, 0], 1).is_err());
        assert_eq!(ModelSpec::fcn3(5, 1).unwrap().depth(), 2);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let spec = ModelSpec::new(3, vec![4], 2).unwrap();
        let p = Params::zeros(&spec).unwrap();
        assert_eq!(p.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn hand_evaluated_forward() {
        let p = tiny_net();
        assert_eq!(p.forward(&[2.0]).unwrap(), vec![7.0]);
        // ReLU clips the hidden unit, only the output bias remains.
        assert_eq!(p.forward(&[-2.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = tiny_net();
        assert!(matches!(p.forward(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn trace_has_one_entry_per_layer() {
        let spec = ModelSpec::new(3, vec![4, 5], 2).unwrap();
        let p = init_params(&spec, 3).unwrap();
        let (out, trace) = p.forward_traced(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(trace.pre.len(), 3);
        assert_eq!(trace.post.len(), 3);
        assert_eq!(out, p.forward(&[0.1, 0.2, 0.3]).unwrap());
        assert!(trace.post[0].iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn mixed_forward_endpoints() {
        let spec = ModelSpec::new(3, vec![6], 2).unwrap();
        let p = init_params(&spec, 11).unwrap();
        let xi = [0.3, -0.7, 1.2];
        let xj = [-1.0, 0.4, 0.0];
        for layer in 0..2 {
            let one = p.forward_mixed_hidden(&xi, &xj, 1.0, layer).unwrap();
            let zero = p.forward_mixed_hidden(&xi, &xj, 0.0, layer).unwrap();
            for (a, b) in one.iter().zip(p.forward(&xi).unwrap()) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in zero.iter().zip(p.forward(&xj).unwrap()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(p.forward_mixed_hidden(&xi, &xj, 0.5, 2).is_err());
    }

    #[test]
    fn mixed_forward_is_linear_when_no_unit_clips() {
        // Positive weights and inputs keep every ReLU in its linear region, so
        // the network is affine and mixing commutes with the forward pass.
        let spec = ModelSpec::new(2, vec![3], 1).unwrap();
        let mut p = Params::zeros(&spec).unwrap();
        p.weights_mut(0).copy_from_slice(&[0.5, 1.0, 2.0, 0.25, 1.5, 0.75]);
        p.bias_mut(0).copy_from_slice(&[0.1, 0.2, 0.3]);
        p.weights_mut(1).copy_from_slice(&[1.0, -2.0, 0.5]);
        p.bias_mut(1)[0] = 0.4;
        let xi = [1.0, 2.0];
        let xj = [3.0, 0.5];
        let fi = p.forward(&xi).unwrap()[0];
        let fj = p.forward(&xj).unwrap()[0];
        let lambda = 0.3;
        let mixed = p.forward_mixed_hidden(&xi, &xj, lambda, 1).unwrap()[0];
        assert!((mixed - (lambda * fi + (1.0 - lambda) * fj)).abs() < 1e-12);
    }

    #[test]
    fn predict_matrix_matches_forward() {
        let spec = ModelSpec::new(3, vec![7, 4], 2).unwrap();
        let p = init_params(&spec, 5).unwrap();
        let x = Matrix::from_rows(&[vec![0.1, 0.2, 0.3], vec![-1.0, 0.5, 2.0]]).unwrap();
        let out = p.predict_matrix(&x).unwrap();
        for i in 0..2 {
            assert_eq!(out.row(i), p.forward(x.row(i)).unwrap().as_slice());
        }
    }
}
