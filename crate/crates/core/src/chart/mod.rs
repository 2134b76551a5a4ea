//! Two-dimensional channel charts.
//!
//! The geodesic Siamese encoder learns a parametric map from aligned CIR
//! tensors to chart points whose distances match the geodesic CIR distances.
//! PCA, Sammon mapping and SMACOF-MDS on geodesics serve as baselines.

mod encoder;
pub mod linalg;
mod mds;
mod pca;
mod sammon;
mod train;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::DistanceMatrix;
use crate::{Error, Result};

pub use encoder::{forward, forward_flat, init_encoder, siamese_step, EncoderParams};
pub use mds::{classical_mds, mds_embed, stress, MdsConfig, MdsInit, MdsOutcome};
pub use pca::{pca_embed, PcaModel};
pub use sammon::{sammon_embed, sammon_stress, SammonConfig, SammonOutcome};
pub use train::{embed_dataset, train, Adam, TrainConfig, TrainOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SiameseGeo,
    IsomapMds,
    Pca,
    Sammon,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::SiameseGeo, Method::IsomapMds, Method::Pca, Method::Sammon];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::SiameseGeo => "siamese_geo",
            Method::IsomapMds => "isomap_mds",
            Method::Pca => "pca",
            Method::Sammon => "sammon",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    /// Whether the method can map unseen inputs directly.
    pub fn is_parametric(self) -> bool {
        matches!(self, Method::SiameseGeo | Method::Pca)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub points: Vec<[f64; 2]>,
    pub method: Method,
}

impl Embedding {
    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p[0].is_finite() && p[1].is_finite())
    }
}

/// Place unseen points of a non-parametric chart at the inverse-distance
/// weighted mean of their `k` nearest training points.
///
/// `cross` is row-major `[n_new, n_train]` of distances from each new input
/// to every training input.
pub fn extend_out_of_sample(train: &Embedding, cross: &[f64], k: usize) -> Result<Embedding> {
    let n_train = train.points.len();
    if n_train == 0 || cross.len() % n_train != 0 || k == 0 {
        return Err(Error::ShapeMismatch(alloc::format!("{} cross distances for {n_train} training points", cross.len())));
    }
    let k = k.min(n_train);
    let mut idx: Vec<usize> = Vec::with_capacity(n_train);
    let points = cross
        .chunks(n_train)
        .map(|row| {
            idx.clear();
            idx.extend(0..n_train);
            let cmp = |a: &usize, b: &usize| row[*a].total_cmp(&row[*b]).then(a.cmp(b));
            if k < n_train {
                idx.select_nth_unstable_by(k - 1, cmp);
            }
            let near = &mut idx[..k];
            near.sort_by(cmp);
            if row[near[0]] == 0.0 {
                return train.points[near[0]];
            }
            let (mut acc, mut wsum) = ([0.0; 2], 0.0);
            for &j in near.iter() {
                let w = 1.0 / row[j];
                acc[0] += w * train.points[j][0];
                acc[1] += w * train.points[j][1];
                wsum += w;
            }
            [acc[0] / wsum, acc[1] / wsum]
        })
        .collect();
    Ok(Embedding { points, method: train.method })
}

/// Euclidean distance matrix of a chart.
pub fn chart_distances(e: &Embedding) -> DistanceMatrix {
    DistanceMatrix::euclidean(&e.points)
}
