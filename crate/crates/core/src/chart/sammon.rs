use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::chart::mds::{classical_mds, dist};
use crate::chart::{Embedding, Method};
use crate::graph::DistanceMatrix;
use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SammonConfig {
    pub max_iter: usize,
    /// Stop when the relative stress decrease falls below this.
    pub tolerance: f64,
    /// Maximum number of step halvings per iteration.
    pub max_halvings: usize,
}

impl Default for SammonConfig {
    fn default() -> Self {
        Self { max_iter: 300, tolerance: 1e-7, max_halvings: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct SammonOutcome {
    pub embedding: Embedding,
    pub stress_history: Vec<f64>,
}

/// Floor for zero input distances, relative to the largest distance.
const FLOOR: f64 = 1e-9;

fn floored(d: &DistanceMatrix) -> Vec<f64> {
    let floor = FLOOR * d.max().max(1.0);
    d.values.iter().map(|&v| v.max(floor)).collect()
}

/// `Σ_{i<j} (D_ij − d_ij)² / D_ij  /  Σ_{i<j} D_ij`.
pub fn sammon_stress(d: &DistanceMatrix, points: &[[f64; 2]]) -> f64 {
    stress_with(&floored(d), d.n, points)
}

fn stress_with(dv: &[f64], n: usize, points: &[[f64; 2]]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let dij = dv[i * n + j];
            let e = dij - dist(points[i], points[j]);
            num += e * e / dij;
            den += dij;
        }
    }
    if den > 0.0 { num / den } else { 0.0 }
}

/// Sammon mapping initialised with classical scaling.
///
/// Each iteration moves along Sammon's diagonal-Newton direction and halves
/// the step until the stress does not increase.
pub fn sammon_embed(d: &DistanceMatrix, cfg: &SammonConfig) -> SammonOutcome {
    let n = d.n;
    let dv = floored(d);
    let mut y = classical_mds(d).unwrap_or_else(|| (0..n).map(|i| [i as f64, (i * i % 7) as f64]).collect());
    if n == 2 {
        y = vec![[0.0, 0.0], [d.get(0, 1), 0.0]];
    }
    let scale: f64 = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| dv[i * n + j]).sum();
    let mut s = stress_with(&dv, n, &y);
    let mut history = vec![s];
    let mut step = vec![[0.0; 2]; n];
    let mut trial = y.clone();
    for _ in 0..cfg.max_iter {
        if s == 0.0 || scale == 0.0 {
            break;
        }
        for i in 0..n {
            let (mut g, mut h) = ([0.0; 2], [0.0; 2]);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dstar = dv[i * n + j];
                let dij = dist(y[i], y[j]).max(1e-12 * dstar);
                let diff = [y[i][0] - y[j][0], y[i][1] - y[j][1]];
                let q = dstar - dij;
                let c = dstar * dij;
                for k in 0..2 {
                    g[k] += q / c * diff[k];
                    h[k] += (q - diff[k] * diff[k] / dij * (1.0 + q / dij)) / c;
                }
            }
            // Gradient of the normalised stress is −2/scale · g.
            for k in 0..2 {
                step[i][k] = -g[k] / math::abs(h[k]).max(1e-300);
            }
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=cfg.max_halvings {
            for i in 0..n {
                trial[i] = [y[i][0] - alpha * step[i][0], y[i][1] - alpha * step[i][1]];
            }
            let t = stress_with(&dv, n, &trial);
            if t <= s {
                accepted = true;
                core::mem::swap(&mut y, &mut trial);
                let prev = s;
                s = t;
                history.push(s);
                if prev - s <= cfg.tolerance * prev {
                    return SammonOutcome { embedding: Embedding { points: y, method: Method::Sammon }, stress_history: history };
                }
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    SammonOutcome { embedding: Embedding { points: y, method: Method::Sammon }, stress_history: history }
}
