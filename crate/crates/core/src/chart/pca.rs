use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::chart::linalg::top_eigen;
use crate::chart::{Embedding, Method};
use crate::csi::AlignedTensor;
use crate::math;
use crate::{Error, Result};

/// Mean and the two leading principal directions of a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: [Vec<f64>; 2],
    /// Variances along the two components.
    pub variances: [f64; 2],
}

impl PcaModel {
    /// Fit on the rows of `data`. The covariance is never formed; subspace
    /// iteration applies `Xcᵀ Xc / (n − 1)` implicitly.
    pub fn fit(data: &[&[f64]]) -> Result<Self> {
        let n = data.len();
        if n < 3 {
            return Err(Error::InvalidInput(alloc::format!("PCA needs at least 3 rows, got {n}")));
        }
        let dim = data[0].len();
        if let Some(i) = data.iter().position(|r| r.len() != dim) {
            return Err(Error::ShapeMismatch(alloc::format!("row {i} has {} values, row 0 has {dim}", data[i].len())));
        }
        let mut mean = vec![0.0; dim];
        for r in data {
            for (m, x) in mean.iter_mut().zip(*r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut proj = vec![0.0; n];
        let (values, mut vectors) = top_eigen(dim, 2, 6, 1000, 1e-11, |v, out| {
            let mv = math::dot(&mean, v);
            for (p, r) in proj.iter_mut().zip(data) {
                *p = math::dot(r, v) - mv;
            }
            out.fill(0.0);
            for (p, r) in proj.iter().zip(data) {
                for ((o, x), m) in out.iter_mut().zip(*r).zip(&mean) {
                    *o += p * (x - m);
                }
            }
            out.iter_mut().for_each(|o| *o /= (n - 1) as f64);
        });
        let top = values.first().copied().unwrap_or(0.0);
        let rank = values.iter().filter(|&&l| l > 1e-12 * top.max(0.0) && l > 0.0).count();
        if rank < 2 {
            return Err(Error::RankDeficient { rank });
        }
        for v in vectors.iter_mut() {
            let peak = v.iter().fold(0.0f64, |m, x| m.max(math::abs(*x)));
            if let Some(first) = v.iter().find(|x| math::abs(**x) > 1e-9 * peak) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
        }
        let [a, b]: [Vec<f64>; 2] = [vectors.swap_remove(0), vectors.swap_remove(0)];
        Ok(Self { mean, components: [a, b], variances: [values[0], values[1]] })
    }

    pub fn transform(&self, x: &[f64]) -> Result<[f64; 2]> {
        if x.len() != self.mean.len() {
            return Err(Error::ShapeMismatch(alloc::format!("input has {} values, model has {}", x.len(), self.mean.len())));
        }
        let project = |c: &[f64]| math::dot(c, x) - math::dot(c, &self.mean);
        Ok([project(&self.components[0]), project(&self.components[1])])
    }

    pub fn embed(&self, tensors: &[AlignedTensor]) -> Result<Embedding> {
        let points = tensors.iter().map(|t| self.transform(&t.values)).collect::<Result<_>>()?;
        Ok(Embedding { points, method: Method::Pca })
    }
}

/// Project flattened tensors onto their two leading principal directions.
pub fn pca_embed(tensors: &[AlignedTensor]) -> Result<Embedding> {
    let rows: Vec<&[f64]> = tensors.iter().map(|t| t.values.as_slice()).collect();
    PcaModel::fit(&rows)?.embed(tensors)
}
