use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::csi::AlignedTensor;
use crate::math;
use crate::rng::{self, Purpose};
use crate::{Error, Result};

/// Fully connected encoder: ReLU on hidden layers, identity on the 2-D output.
///
/// All weights and biases live in one flat vector; layer `l` stores its
/// `out × in` row-major weight matrix followed by its bias. Inputs are divided
/// by `input_scale` and outputs multiplied by `output_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    /// `[input, hidden.., 2]`.
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
    pub input_scale: f64,
    pub output_scale: f64,
}

pub(crate) fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

pub fn init_encoder(input: usize, hidden: &[usize], seed: u64) -> Result<EncoderParams> {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(input);
    sizes.extend_from_slice(hidden);
    sizes.push(2);
    if let Some(i) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EncoderShape(format!("layer {i} of {sizes:?} has zero size")));
    }
    let mut rng = rng::stream(seed, Purpose::EncoderInit, 0);
    let mut params = Vec::with_capacity(param_count(&sizes));
    for w in sizes.windows(2) {
        let bound = 1.0 / math::sqrt(w[0] as f64);
        for _ in 0..w[0] * w[1] + w[1] {
            params.push((2.0 * rng.random::<f64>() - 1.0) * bound);
        }
    }
    Ok(EncoderParams { sizes, params, input_scale: 1.0, output_scale: 1.0 })
}

impl EncoderParams {
    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    fn offset(&self, layer: usize) -> usize {
        param_count(&self.sizes[..=layer])
    }

    /// `(weights, bias)` of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        let start = self.offset(l);
        self.params[start..start + i * o + o].split_at(i * o)
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 || self.sizes.last() != Some(&2) || self.sizes.contains(&0) {
            return Err(Error::EncoderShape(format!("invalid layer sizes {:?}", self.sizes)));
        }
        if self.params.len() != param_count(&self.sizes) {
            return Err(Error::EncoderShape(format!(
                "{} parameters for layer sizes {:?} (want {})",
                self.params.len(),
                self.sizes,
                param_count(&self.sizes)
            )));
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_size() {
            return Err(Error::EncoderShape(format!("input has {} values, encoder expects {}", x.len(), self.input_size())));
        }
        Ok(())
    }
}

/// Activations of every layer for one input, reused across calls.
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub(crate) fn new(p: &EncoderParams) -> Self {
        Self { acts: p.sizes[1..].iter().map(|&s| vec![0.0; s]).collect() }
    }

    pub(crate) fn output(&self, p: &EncoderParams) -> [f64; 2] {
        let z = self.acts.last().map(Vec::as_slice).unwrap_or(&[0.0, 0.0]);
        [z[0] * p.output_scale, z[1] * p.output_scale]
    }
}

pub(crate) fn forward_trace(p: &EncoderParams, x: &[f64], trace: &mut Trace) -> [f64; 2] {
    let last = p.n_layers() - 1;
    for l in 0..=last {
        let (w, b) = p.layer(l);
        let n_in = p.sizes[l];
        let (prev, rest) = trace.acts.split_at_mut(l);
        let (input, scale) = if l == 0 { (x, 1.0 / p.input_scale) } else { (prev[l - 1].as_slice(), 1.0) };
        for (o, out) in rest[0].iter_mut().enumerate() {
            let pre = math::dot(&w[o * n_in..(o + 1) * n_in], input) * scale + b[o];
            *out = if l < last { pre.max(0.0) } else { pre };
        }
    }
    trace.output(p)
}

/// Accumulate `∂(g · z)/∂θ` into `grad` given the upstream gradient `g` on
/// the chart point `z` of the traced input `x`.
pub(crate) fn backward(p: &EncoderParams, x: &[f64], trace: &Trace, g: [f64; 2], grad: &mut [f64], delta: &mut Vec<f64>, next: &mut Vec<f64>) {
    delta.clear();
    delta.extend_from_slice(&[g[0] * p.output_scale, g[1] * p.output_scale]);
    for l in (0..p.n_layers()).rev() {
        let n_in = p.sizes[l];
        let n_out = p.sizes[l + 1];
        let start = p.offset(l);
        let (input, scale) = if l == 0 { (x, 1.0 / p.input_scale) } else { (trace.acts[l - 1].as_slice(), 1.0) };
        let (gw, gb) = grad[start..start + n_in * n_out + n_out].split_at_mut(n_in * n_out);
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            gb[o] += d;
            let ds = d * scale;
            for (gwi, xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                *gwi += ds * xi;
            }
        }
        if l == 0 {
            break;
        }
        let (w, _) = p.layer(l);
        next.clear();
        next.resize(n_in, 0.0);
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            for (ni, wi) in next.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                *ni += d * wi;
            }
        }
        for (ni, a) in next.iter_mut().zip(&trace.acts[l - 1]) {
            if *a <= 0.0 {
                *ni = 0.0;
            }
        }
        core::mem::swap(delta, next);
    }
}

/// Chart point of a flattened input.
pub fn forward_flat(p: &EncoderParams, x: &[f64]) -> Result<[f64; 2]> {
    p.validate()?;
    p.check_input(x)?;
    Ok(forward_trace(p, x, &mut Trace::new(p)))
}

pub fn forward(p: &EncoderParams, x: &AlignedTensor) -> Result<[f64; 2]> {
    forward_flat(p, &x.values)
}

/// Subgradient of `|d − ‖zi − zj‖|` with respect to `zi` (the `zj` gradient
/// is its negative). Zero where either norm is not differentiable.
pub(crate) fn pair_loss_grad(zi: [f64; 2], zj: [f64; 2], target: f64) -> (f64, [f64; 2]) {
    let dz = [zi[0] - zj[0], zi[1] - zj[1]];
    let dist = math::hypot(dz[0], dz[1]);
    let diff = dist - target;
    let loss = math::abs(diff);
    if dist == 0.0 || diff == 0.0 {
        return (loss, [0.0, 0.0]);
    }
    let s = if diff > 0.0 { 1.0 } else { -1.0 } / dist;
    (loss, [s * dz[0], s * dz[1]])
}

/// Loss `|target − ‖f(xi) − f(xj)‖|` and its gradient over all parameters,
/// summed over both weight-shared branches.
pub fn siamese_step(p: &EncoderParams, xi: &[f64], xj: &[f64], target: f64) -> Result<(f64, Vec<f64>)> {
    p.validate()?;
    p.check_input(xi)?;
    p.check_input(xj)?;
    let mut ti = Trace::new(p);
    let mut tj = Trace::new(p);
    let zi = forward_trace(p, xi, &mut ti);
    let zj = forward_trace(p, xj, &mut tj);
    let (loss, g) = pair_loss_grad(zi, zj, target);
    let mut grad = vec![0.0; p.params.len()];
    let (mut d, mut n) = (Vec::new(), Vec::new());
    backward(p, xi, &ti, g, &mut grad, &mut d, &mut n);
    backward(p, xj, &tj, [-g[0], -g[1]], &mut grad, &mut d, &mut n);
    Ok((loss, grad))
}
