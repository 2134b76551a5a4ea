//! Distance-metric correlation study on a simulated dataset.

use std::path::Path;

use anyhow::{Context, Result};
use log::warn;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use geochart_core::graph::{pairwise_matrix, DistanceMatrix};
use geochart_core::sim::Dataset;

use crate::config::PipelineConfig;
use crate::io;
use crate::pipeline::{geodesics, positions, tensors, window_width};
use geochart_core::math::pearson;
use geochart_core::rng::{self, Purpose};

/// One sampled pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSample {
    pub i: usize,
    pub j: usize,
    pub d_euc: f64,
    pub d_cir: f64,
    pub d_geo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub r_cir: f64,
    pub r_geo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub pairs: usize,
    pub requested_pairs: usize,
    pub r_cir: f64,
    pub r_geo: f64,
    pub bins: Vec<StudyBin>,
}

/// Index of pair `(i, j)`, `i < j`, in row-major upper-triangle order.
fn unrank(mut r: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    while r >= n - 1 - i {
        r -= n - 1 - i;
        i += 1;
    }
    (i, i + 1 + r)
}

/// Draw `m` distinct pairs without replacement, sorted. Requests beyond the
/// number of pairs are clamped.
pub fn sample_pairs(n: usize, m: usize, seed: u64) -> Vec<(usize, usize)> {
    let total = n * n.saturating_sub(1) / 2;
    let m = if m > total {
        warn!("{m} pairs requested but only {total} exist; using all of them");
        total
    } else {
        m
    };
    let mut rng = rng::stream(seed, Purpose::Study, 0);
    let mut ranks = index::sample(&mut rng, total, m).into_vec();
    ranks.sort_unstable();
    ranks.into_iter().map(|r| unrank(r, n)).collect()
}

pub fn collect(euc: &DistanceMatrix, cir: &DistanceMatrix, geo: &DistanceMatrix, pairs: &[(usize, usize)]) -> Vec<PairSample> {
    pairs
        .iter()
        .map(|&(i, j)| PairSample { i, j, d_euc: euc.get(i, j), d_cir: cir.get(i, j), d_geo: geo.get(i, j) })
        .collect()
}

/// Correlations against `d_euc`, overall and per bin of width `bin_width`.
pub fn correlate(samples: &[PairSample], requested: usize, bin_width: f64) -> StudyReport {
    let col = |s: &[PairSample], f: fn(&PairSample) -> f64| s.iter().map(f).collect::<Vec<_>>();
    let euc = col(samples, |p| p.d_euc);
    let top = euc.iter().copied().fold(0.0, f64::max);
    let n_bins = (top / bin_width).floor() as usize + 1;
    let bins = (0..if samples.is_empty() { 0 } else { n_bins })
        .map(|b| {
            let (lo, hi) = (b as f64 * bin_width, (b + 1) as f64 * bin_width);
            let members: Vec<PairSample> = samples.iter().copied().filter(|p| p.d_euc >= lo && p.d_euc < hi).collect();
            let e = col(&members, |p| p.d_euc);
            StudyBin {
                lo,
                hi,
                count: members.len(),
                r_cir: pearson(&e, &col(&members, |p| p.d_cir)),
                r_geo: pearson(&e, &col(&members, |p| p.d_geo)),
            }
        })
        .collect();
    StudyReport {
        pairs: samples.len(),
        requested_pairs: requested,
        r_cir: pearson(&euc, &col(samples, |p| p.d_cir)),
        r_geo: pearson(&euc, &col(samples, |p| p.d_geo)),
        bins,
    }
}

pub fn write_samples(path: &Path, samples: &[PairSample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["i", "j", "d_euc", "d_cir", "d_geo"])?;
    for s in samples {
        w.write_record([s.i.to_string(), s.j.to_string(), format!("{:?}", s.d_euc), format!("{:?}", s.d_cir), format!("{:?}", s.d_geo)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bins(path: &Path, report: &StudyReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["lo", "hi", "count", "r_cir", "r_geo"])?;
    for b in &report.bins {
        w.write_record([b.lo.to_string(), b.hi.to_string(), b.count.to_string(), format!("{:?}", b.r_cir), format!("{:?}", b.r_geo)])?;
    }
    w.flush()?;
    Ok(())
}

/// Sample pairs of `ds`, write `study.csv`, `study_bins.csv` and
/// `study.json` into `out`.
pub fn run_study(ds: &Dataset, cfg: &PipelineConfig, out: &Path) -> Result<StudyReport> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let t = tensors(ds, window_width(cfg, ds))?;
    let cir = pairwise_matrix(&t)?;
    let geo = geodesics(&cir, cfg.graph.k)?;
    let euc = DistanceMatrix::euclidean(&positions(ds));
    let pairs = sample_pairs(ds.len(), cfg.study.pairs, cfg.seed);
    let samples = collect(&euc, &cir, &geo, &pairs);
    let report = correlate(&samples, cfg.study.pairs, cfg.study.bin_width);
    write_samples(&out.join("study.csv"), &samples)?;
    write_bins(&out.join("study_bins.csv"), &report)?;
    io::write_json(&out.join("study.json"), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unrank_enumerates_upper_triangle() {
        let n = 7;
        let all: Vec<_> = (0..n * (n - 1) / 2).map(|r| unrank(r, n)).collect();
        let expected: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        assert_eq!(all, expected);
    }

    #[test]
    fn oversized_request_is_clamped() {
        assert_eq!(sample_pairs(5, 100, 1).len(), 10);
        assert!(sample_pairs(5, 0, 1).is_empty());
        let p = sample_pairs(50, 300, 2);
        let mut d = p.clone();
        d.dedup();
        assert_eq!(d.len(), 300);
        assert!(p.iter().all(|&(i, j)| i < j && j < 50));
    }
}
