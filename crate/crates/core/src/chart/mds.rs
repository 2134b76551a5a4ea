use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chart::linalg::top_eigen;
use crate::chart::{Embedding, Method};
use crate::graph::DistanceMatrix;
use crate::math;
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MdsInit {
    /// Classical (Torgerson) scaling of the double-centred squared distances.
    Classical,
    /// Uniform points in the unit square from the given seed.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MdsConfig {
    pub max_iter: usize,
    /// Stop when the relative stress decrease falls below this.
    pub tolerance: f64,
    pub init: MdsInit,
}

impl Default for MdsConfig {
    fn default() -> Self {
        Self { max_iter: 300, tolerance: 1e-7, init: MdsInit::Classical }
    }
}

#[derive(Debug, Clone)]
pub struct MdsOutcome {
    pub embedding: Embedding,
    /// Raw stress `Σ_{i<j} (D_ij − d_ij)²`, starting with the initial layout.
    pub stress_history: Vec<f64>,
}

pub fn stress(d: &DistanceMatrix, points: &[[f64; 2]]) -> f64 {
    let mut s = 0.0;
    for i in 0..d.n {
        for j in i + 1..d.n {
            let e = d.get(i, j) - dist(points[i], points[j]);
            s += e * e;
        }
    }
    s
}

#[inline]
pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    math::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]))
}

/// Torgerson scaling: top two eigenpairs of `−½ J D² J`. Returns `None` when
/// fewer than two positive eigenvalues are found.
pub fn classical_mds(d: &DistanceMatrix) -> Option<Vec<[f64; 2]>> {
    let n = d.n;
    if n < 3 {
        return None;
    }
    let sq: Vec<f64> = d.values.iter().map(|v| v * v).collect();
    let row_mean: Vec<f64> = (0..n).map(|i| sq[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64).collect();
    let total = row_mean.iter().sum::<f64>() / n as f64;
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = -0.5 * (sq[i * n + j] - row_mean[i] - row_mean[j] + total);
        }
    }
    let (values, vectors) = top_eigen(n, 6, 6, 500, 1e-9, |v, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = math::dot(&b[i * n..(i + 1) * n], v);
        }
    });
    let top = values.first().copied().unwrap_or(0.0);
    if !(values.len() >= 2 && values[1] > 1e-12 * top) {
        return None;
    }
    let (s0, s1) = (math::sqrt(values[0]), math::sqrt(values[1]));
    Some((0..n).map(|i| [s0 * vectors[0][i], s1 * vectors[1][i]]).collect())
}

fn random_init(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = rng::stream(seed, Purpose::Embedding, 0);
    (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect()
}

/// Metric MDS by stress majorisation (SMACOF, unit weights).
///
/// Every Guttman transform `X ← B(X) X / n` can only lower the stress, so
/// the recorded history is non-increasing up to rounding.
pub fn mds_embed(d: &DistanceMatrix, cfg: &MdsConfig) -> MdsOutcome {
    let n = d.n;
    let mut x = match cfg.init {
        MdsInit::Classical => classical_mds(d).unwrap_or_else(|| random_init(n, 0)),
        MdsInit::Random { seed } => random_init(n, seed),
    };
    let mut history = vec![stress(d, &x)];
    let mut next = vec![[0.0; 2]; n];
    for _ in 0..cfg.max_iter {
        for i in 0..n {
            let mut acc = [0.0; 2];
            let mut diag = 0.0;
            let row = d.row(i);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dij = dist(x[i], x[j]);
                if dij > 0.0 {
                    let bij = row[j] / dij;
                    diag += bij;
                    acc[0] -= bij * x[j][0];
                    acc[1] -= bij * x[j][1];
                }
            }
            next[i] = [(acc[0] + diag * x[i][0]) / n as f64, (acc[1] + diag * x[i][1]) / n as f64];
        }
        core::mem::swap(&mut x, &mut next);
        let s = stress(d, &x);
        let prev = *history.last().unwrap_or(&s);
        history.push(s);
        if prev - s <= cfg.tolerance * prev {
            break;
        }
    }
    MdsOutcome { embedding: Embedding { points: x, method: Method::IsomapMds }, stress_history: history }
}
