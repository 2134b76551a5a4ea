use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::chart::encoder::{backward, forward_trace, pair_loss_grad, Trace};
use crate::chart::{init_encoder, EncoderParams, Embedding, Method};
use crate::csi::AlignedTensor;
use crate::graph::{DistanceMatrix, MatrixKind};
use crate::math;
use crate::rng::{self, Purpose};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    /// Upper bound on epochs.
    pub epochs: usize,
    /// Points per minibatch; every pair among them contributes to the loss.
    pub batch_points: usize,
    /// Pairs per epoch. `None` walks once through a shuffled index list.
    pub pairs_per_epoch: Option<usize>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Stop after this many epochs without relative improvement of at least
    /// `min_improvement`.
    pub patience: usize,
    pub min_improvement: f64,
    pub seed: u64,
    /// Input divisor; `None` uses the largest input magnitude.
    pub input_scale: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 128, 64],
            epochs: 200,
            batch_points: 64,
            pairs_per_epoch: None,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            patience: 10,
            min_improvement: 1e-3,
            seed: 0,
            input_scale: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::TrainConfig(m.into()));
        if self.batch_points < 2 {
            return bad("batch_points must be at least 2");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) || !(self.epsilon > 0.0) {
            return bad("Adam parameters out of range");
        }
        if self.pairs_per_epoch == Some(0) {
            return bad("pairs_per_epoch must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        if let Some(s) = self.input_scale {
            if !(s > 0.0 && s.is_finite()) {
                return bad("input_scale must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    /// Mean minibatch loss per epoch, in target units.
    pub loss_history: Vec<f64>,
    pub stopped_early: bool,
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    b1t: f64,
    b2t: f64,
}

impl Adam {
    pub fn new(n: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self { lr, beta1, beta2, eps, m: vec![0.0; n], v: vec![0.0; n], b1t: 1.0, b2t: 1.0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.b1t *= self.beta1;
        self.b2t *= self.beta2;
        let c1 = 1.0 / (1.0 - self.b1t);
        let c2 = 1.0 / (1.0 - self.b2t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m * c1) / (math::sqrt(*v * c2) + self.eps);
        }
    }
}

/// Mean loss over all pairs of `batch` and its parameter gradient.
fn batch_gradient(
    p: &EncoderParams,
    inputs: &[&[f64]],
    batch: &[usize],
    targets: &DistanceMatrix,
    traces: &mut [Trace],
    grad: &mut [f64],
    scratch: &mut (Vec<f64>, Vec<f64>),
) -> f64 {
    let m = batch.len();
    let z: Vec<[f64; 2]> = batch.iter().zip(traces.iter_mut()).map(|(&i, t)| forward_trace(p, inputs[i], t)).collect();
    let pairs = (m * (m - 1) / 2) as f64;
    let mut gz = vec![[0.0; 2]; m];
    let mut loss = 0.0;
    for a in 0..m {
        for b in a + 1..m {
            let (l, g) = pair_loss_grad(z[a], z[b], targets.get(batch[a], batch[b]));
            loss += l;
            gz[a][0] += g[0];
            gz[a][1] += g[1];
            gz[b][0] -= g[0];
            gz[b][1] -= g[1];
        }
    }
    grad.fill(0.0);
    for (a, &i) in batch.iter().enumerate() {
        let g = [gz[a][0] / pairs, gz[a][1] / pairs];
        if g != [0.0, 0.0] {
            backward(p, inputs[i], &traces[a], g, grad, &mut scratch.0, &mut scratch.1);
        }
    }
    loss / pairs
}

/// Fit the encoder so chart distances match geodesic distances.
///
/// Each step takes `batch_points` distinct points and the mean absolute
/// error over all pairs among them; gradients flow through the shared
/// weights of every branch.
pub fn train(tensors: &[AlignedTensor], d_geo: &DistanceMatrix, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if d_geo.kind != MatrixKind::Geodesic {
        return Err(Error::InvalidInput(format!("training targets must be geodesic, got {:?}", d_geo.kind)));
    }
    let n = tensors.len();
    if n < 2 || d_geo.n != n {
        return Err(Error::ShapeMismatch(format!("{n} tensors for a {0}×{0} target matrix", d_geo.n)));
    }
    let width = tensors[0].values.len();
    if let Some(i) = tensors.iter().position(|t| t.values.len() != width) {
        return Err(Error::ShapeMismatch(format!("tensor {i} differs in size from tensor 0")));
    }
    let inputs: Vec<&[f64]> = tensors.iter().map(|t| t.values.as_slice()).collect();
    let input_scale = cfg.input_scale.unwrap_or_else(|| inputs.iter().flat_map(|x| x.iter()).fold(0.0, |m: f64, v| m.max(math::abs(*v))));
    let output_scale = d_geo.max();
    let mut p = init_encoder(width, &cfg.hidden, cfg.seed)?;
    p.input_scale = if input_scale > 0.0 { input_scale } else { 1.0 };
    p.output_scale = if output_scale > 0.0 { output_scale } else { 1.0 };
    // Targets in units of the output scale keep the loss well conditioned.
    let mut targets = d_geo.clone();
    targets.values.iter_mut().for_each(|v| *v /= p.output_scale);
    let unit_scale = p.output_scale;
    p.output_scale = 1.0;

    let m = cfg.batch_points.min(n);
    let batches = match cfg.pairs_per_epoch {
        Some(pairs) => pairs.div_ceil(m * (m - 1) / 2),
        None => (n / m).max(1),
    };
    let mut rng = rng::stream(cfg.seed, Purpose::Training, 0);
    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n;
    let mut adam = Adam::new(p.params.len(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut grad = vec![0.0; p.params.len()];
    let mut traces: Vec<Trace> = (0..m).map(|_| Trace::new(&p)).collect();
    let mut scratch = (Vec::new(), Vec::new());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut stopped_early = false;
    for epoch in 0..cfg.epochs {
        let mut total = 0.0;
        for step in 0..batches {
            if cursor + m > n {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let batch = &order[cursor..cursor + m];
            cursor += m;
            let loss = batch_gradient(&p, &inputs, batch, &targets, &mut traces, &mut grad, &mut scratch);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            adam.step(&mut p.params, &grad);
            if !p.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            total += loss;
        }
        let mean = total / batches as f64 * unit_scale;
        history.push(mean);
        if mean < best * (1.0 - cfg.min_improvement) {
            best = mean;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }
    p.output_scale = unit_scale;
    Ok(TrainOutcome { params: p, loss_history: history, stopped_early })
}

pub fn embed_dataset(p: &EncoderParams, tensors: &[AlignedTensor]) -> Result<Embedding> {
    p.validate()?;
    let mut trace = Trace::new(p);
    let points = tensors
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if t.values.len() != p.input_size() {
                return Err(Error::EncoderShape(format!("tensor {i} has {} values, encoder expects {}", t.values.len(), p.input_size())));
            }
            Ok(forward_trace(p, &t.values, &mut trace))
        })
        .collect::<Result<_>>()?;
    Ok(Embedding { points, method: Method::SiameseGeo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::forward;
    use crate::graph::{geodesic_matrix, knn_graph};

    fn line_tensors(n: usize) -> Vec<AlignedTensor> {
        // A bump sliding along a 40-sample axis.
        (0..n)
            .map(|i| {
                let c = 5.0 + 3.0 * i as f64;
                let values = (0..40).map(|t| (-((t as f64 - c) / 3.0).powi(2)).exp()).collect();
                AlignedTensor { values, n_stations: 1, width: 40, sample_rate: 1e9, window_origin: 0.0 }
            })
            .collect()
    }

    fn line_geodesics(n: usize) -> DistanceMatrix {
        let d = DistanceMatrix::from_fn(n, MatrixKind::Pairwise, |i, j| (j - i) as f64);
        geodesic_matrix(&knn_graph(&d, 2).unwrap()).unwrap()
    }

    #[test]
    fn zero_epochs_returns_init() {
        let cfg = TrainConfig { epochs: 0, hidden: vec![8], ..Default::default() };
        let out = train(&line_tensors(5), &line_geodesics(5), &cfg).unwrap();
        assert_eq!(out.params.params, init_encoder(40, &[8], 0).unwrap().params);
        assert!(out.loss_history.is_empty());
    }

    #[test]
    fn learns_a_line() {
        let cfg = TrainConfig { hidden: vec![16, 16], epochs: 3000, batch_points: 10, patience: 3000, learning_rate: 3e-3, ..Default::default() };
        let d = line_geodesics(10);
        let out = train(&line_tensors(10), &d, &cfg).unwrap();
        let final_loss = *out.loss_history.last().unwrap();
        let mean_target = d.upper().sum::<f64>() / 45.0;
        assert!(final_loss < 0.05 * mean_target, "{final_loss} vs {mean_target}");
        assert!(final_loss <= out.loss_history[0]);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = TrainConfig { hidden: vec![8], epochs: 20, batch_points: 4, ..Default::default() };
        let a = train(&line_tensors(10), &line_geodesics(10), &cfg).unwrap();
        let b = train(&line_tensors(10), &line_geodesics(10), &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.loss_history, b.loss_history);
    }

    #[test]
    fn rejects_pairwise_targets_and_bad_config() {
        let d = DistanceMatrix::from_fn(5, MatrixKind::Pairwise, |i, j| (j - i) as f64);
        assert!(train(&line_tensors(5), &d, &TrainConfig::default()).is_err());
        let cfg = TrainConfig { learning_rate: 0.0, ..Default::default() };
        assert!(matches!(train(&line_tensors(5), &line_geodesics(5), &cfg), Err(Error::TrainConfig(_))));
    }

    #[test]
    fn non_finite_targets_abort() {
        let mut d = line_geodesics(5);
        d.values[1] = f64::NAN;
        d.values[5] = f64::NAN;
        let cfg = TrainConfig { hidden: vec![4], epochs: 2, ..Default::default() };
        assert!(matches!(train(&line_tensors(5), &d, &cfg), Err(Error::NonFiniteLoss { epoch: 0, step: 0 })));
    }

    #[test]
    fn embedding_matches_forward() {
        let p = init_encoder(40, &[8], 4).unwrap();
        let mut ts = line_tensors(4);
        ts.push(ts[1].clone());
        let e = embed_dataset(&p, &ts).unwrap();
        assert_eq!(e.points.len(), 5);
        assert_eq!(e.points[4], e.points[1]);
        for (z, t) in e.points.iter().zip(&ts) {
            assert_eq!(*z, forward(&p, t).unwrap());
        }
    }

    #[test]
    fn pairs_per_epoch_sets_batch_count() {
        let cfg = TrainConfig { hidden: vec![4], epochs: 1, batch_points: 4, pairs_per_epoch: Some(13), ..Default::default() };
        assert!(train(&line_tensors(10), &line_geodesics(10), &cfg).is_ok());
    }
}
