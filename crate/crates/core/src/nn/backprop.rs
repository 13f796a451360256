use crate::error::{Error, Result};
use crate::nn::model::{relu_in_place, Params};

/// One training example. With `mix` set, the input and the partner are pushed
/// to `mix.layer`, blended, and the blend is propagated to the output.
#[derive(Clone, Copy, Debug)]
pub struct Example<'a> {
    pub input: &'a [f64],
    pub target: &'a [f64],
    pub mix: Option<HiddenMix<'a>>,
}

#[derive(Clone, Copy, Debug)]
pub struct HiddenMix<'a> {
    pub partner: &'a [f64],
    pub lambda: f64,
    pub layer: usize,
}

impl<'a> Example<'a> {
    pub fn plain(input: &'a [f64], target: &'a [f64]) -> Self {
        Self {
            input,
            target,
            mix: None,
        }
    }
}

/// Reusable per-branch activation buffers. Level 0 is the input.
pub(crate) struct Scratch {
    z_a: Vec<Vec<f64>>,
    a_a: Vec<Vec<f64>>,
    z_b: Vec<Vec<f64>>,
    a_b: Vec<Vec<f64>>,
    delta: Vec<f64>,
    upstream: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(params: &Params) -> Self {
        let widths = params.spec().widths();
        let levels: Vec<Vec<f64>> = widths.iter().map(|&w| vec![0.0; w]).collect();
        let max = widths.iter().copied().max().unwrap_or(0);
        Self {
            z_a: levels.clone(),
            a_a: levels.clone(),
            z_b: levels.clone(),
            a_b: levels,
            delta: vec![0.0; max],
            upstream: vec![0.0; max],
        }
    }
}

fn check_example(params: &Params, ex: &Example) -> Result<()> {
    let spec = params.spec();
    if ex.input.len() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            context: "example input",
            expected: spec.input_dim,
            got: ex.input.len(),
        });
    }
    if ex.target.len() != spec.output_dim {
        return Err(Error::DimensionMismatch {
            context: "example target",
            expected: spec.output_dim,
            got: ex.target.len(),
        });
    }
    if let Some(mix) = ex.mix {
        if mix.partner.len() != spec.input_dim {
            return Err(Error::DimensionMismatch {
                context: "mixing partner",
                expected: spec.input_dim,
                got: mix.partner.len(),
            });
        }
        if mix.layer >= params.depth() {
            return Err(Error::invalid(format!(
                "mix layer {} must be below the network depth {}",
                mix.layer,
                params.depth()
            )));
        }
    }
    Ok(())
}

/// Forward pass into `z`/`a` for levels `1..=upto`, starting from `a[0]`.
fn forward_levels(params: &Params, z: &mut [Vec<f64>], a: &mut [Vec<f64>], from: usize, upto: usize) {
    let depth = params.depth();
    for level in from + 1..=upto {
        let (lower, upper) = a.split_at_mut(level);
        params.affine(level - 1, &lower[level - 1], &mut z[level]);
        upper[0].copy_from_slice(&z[level]);
        if level < depth {
            relu_in_place(&mut upper[0]);
        }
    }
}

/// Propagates `delta` (gradient wrt the pre-activation at `top`) down to
/// level `bottom`, accumulating parameter gradients. On return,
/// `scratch.upstream[..width(bottom)]` holds the gradient wrt `a[bottom]`
/// when `want_upstream` is set.
#[allow(clippy::too_many_arguments)]
fn backward_levels(
    params: &Params,
    grads: &mut [f64],
    z: &[Vec<f64>],
    a: &[Vec<f64>],
    delta: &mut [f64],
    upstream: &mut [f64],
    top: usize,
    bottom: usize,
    want_upstream: bool,
) {
    let mut level = top;
    while level > bottom {
        let k = level - 1;
        let (outputs, inputs) = params.layer_shape(k);
        let w_off = params.weight_offset(k);
        let b_off = params.bias_offset(k);
        let input = &a[k];
        for o in 0..outputs {
            let d = delta[o];
            if d == 0.0 {
                continue;
            }
            let row = &mut grads[w_off + o * inputs..w_off + (o + 1) * inputs];
            for (g, x) in row.iter_mut().zip(input.iter()) {
                *g += d * x;
            }
            grads[b_off + o] += d;
        }
        let need_down = k > bottom || want_upstream;
        if need_down {
            let w = params.weights(k);
            let up = &mut upstream[..inputs];
            up.iter_mut().for_each(|u| *u = 0.0);
            for o in 0..outputs {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &w[o * inputs..(o + 1) * inputs];
                for (u, wv) in up.iter_mut().zip(row) {
                    *u += d * wv;
                }
            }
            if k > bottom {
                // next delta = upstream * relu'(z[k])
                for i in 0..inputs {
                    delta[i] = if z[k][i] > 0.0 { upstream[i] } else { 0.0 };
                }
            }
        }
        level -= 1;
    }
}

/// Adds `scale * d(loss)/d(params)` of one example into `grads` and returns its
/// unscaled loss (mean squared error over output dimensions).
pub(crate) fn accumulate_example(params: &Params, ex: &Example, grads: &mut [f64], s: &mut Scratch, scale: f64) -> f64 {
    let depth = params.depth();
    let mix_level = ex.mix.map_or(0, |m| m.layer);

    s.a_a[0].copy_from_slice(ex.input);
    if let Some(mix) = ex.mix {
        forward_levels(params, &mut s.z_a, &mut s.a_a, 0, mix.layer);
        s.a_b[0].copy_from_slice(mix.partner);
        forward_levels(params, &mut s.z_b, &mut s.a_b, 0, mix.layer);
        let lam = mix.lambda;
        let (ha, hb) = (&mut s.a_a[mix.layer], &s.a_b[mix.layer]);
        for (x, y) in ha.iter_mut().zip(hb) {
            *x = lam * *x + (1.0 - lam) * y;
        }
    }
    forward_levels(params, &mut s.z_a, &mut s.a_a, mix_level, depth);

    let out = &s.a_a[depth];
    let e = out.len() as f64;
    let mut loss = 0.0;
    for (o, (p, t)) in out.iter().zip(ex.target).enumerate() {
        let r = p - t;
        loss += r * r;
        s.delta[o] = 2.0 * r / e * scale;
    }
    loss /= e;

    let Scratch {
        z_a,
        a_a,
        z_b,
        a_b,
        delta,
        upstream,
    } = s;

    match ex.mix {
        None => backward_levels(params, grads, z_a, a_a, delta, upstream, depth, 0, false),
        Some(mix) => {
            let m = mix.layer;
            backward_levels(params, grads, z_a, a_a, delta, upstream, depth, m, m > 0);
            if m > 0 {
                let width = a_a[m].len();
                let g: Vec<f64> = upstream[..width].to_vec();
                for (branch, weight) in [(0usize, mix.lambda), (1, 1.0 - mix.lambda)] {
                    if weight == 0.0 {
                        continue;
                    }
                    let (z, a) = if branch == 0 { (&*z_a, &*a_a) } else { (&*z_b, &*a_b) };
                    for i in 0..width {
                        delta[i] = if z[m][i] > 0.0 { weight * g[i] } else { 0.0 };
                    }
                    backward_levels(params, grads, z, a, delta, upstream, m, 0, false);
                }
            }
        }
    }
    loss
}

/// Mean batch loss and its exact gradient with respect to the flat parameter buffer.
pub fn gradient(params: &Params, batch: &[Example]) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let mut grads = vec![0.0; params.len()];
    let mut scratch = Scratch::new(params);
    let loss = accumulate_batch(params, batch, &mut grads, &mut scratch)?;
    Ok((loss, grads))
}

pub(crate) fn accumulate_batch(
    params: &Params,
    batch: &[Example],
    grads: &mut [f64],
    scratch: &mut Scratch,
) -> Result<f64> {
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for ex in batch {
        check_example(params, ex)?;
        total += accumulate_example(params, ex, grads, scratch, scale);
    }
    Ok(total * scale)
}

/// Mean batch loss without gradients.
pub fn batch_loss(params: &Params, batch: &[Example]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let mut total = 0.0;
    for ex in batch {
        check_example(params, ex)?;
        let out = match ex.mix {
            None => params.forward(ex.input)?,
            Some(m) => params.forward_mixed_hidden(ex.input, m.partner, m.lambda, m.layer)?,
        };
        let e = out.len() as f64;
        total += out.iter().zip(ex.target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / e;
    }
    Ok(total / batch.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, ModelSpec};

    #[test]
    fn gradient_loss_agrees_with_batch_loss() {
        let spec = ModelSpec::new(3, vec![5], 2).unwrap();
        let p = init_params(&spec, 4).unwrap();
        let x1 = [0.5, -0.1, 0.9];
        let x2 = [-0.4, 0.3, 0.2];
        let t = [0.3, -0.2];
        let batch = [
            Example::plain(&x1, &t),
            Example {
                input: &x2,
                target: &t,
                mix: Some(HiddenMix {
                    partner: &x1,
                    lambda: 0.3,
                    layer: 1,
                }),
            },
        ];
        let (loss, grads) = gradient(&p, &batch).unwrap();
        assert!((loss - batch_loss(&p, &batch).unwrap()).abs() < 1e-12);
        assert_eq!(grads.len(), p.len());
    }

    #[test]
    fn rejects_bad_shapes() {
        let spec = ModelSpec::new(3, vec![5], 2).unwrap();
        let p = init_params(&spec, 4).unwrap();
        let x = [0.5, -0.1];
        let t = [0.3, -0.2];
        assert!(gradient(&p, &[Example::plain(&x, &t)]).is_err());
        assert!(gradient(&p, &[]).is_err());
    }
}
