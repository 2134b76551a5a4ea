//! Chart quality: continuity, trustworthiness, affine registration and
//! positioning errors.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::graph::DistanceMatrix;
use crate::math;
use crate::{Error, Result};

/// `max(1, floor(0.05 · n))`.
pub fn default_k(n: usize) -> usize {
    (n / 20).max(1)
}

/// The normaliser is the worst-case penalty only while `2k <= n`; beyond
/// that scores can leave `[0, 1]`.
fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || 2 * k > n {
        return Err(Error::NeighborhoodSize { k, n });
    }
    Ok(())
}

/// Neighbour order of row `i` over `j != i`, by `(distance, index)`.
fn order(d: &DistanceMatrix, i: usize, out: &mut Vec<usize>) {
    out.clear();
    out.extend((0..d.n).filter(|&j| j != i));
    let row = d.row(i);
    out.sort_unstable_by(|a, b| row[*a].total_cmp(&row[*b]).then(a.cmp(b)));
}

/// Rank penalty `Σ_i Σ_{j ∈ N_K(i; a)} max(0, rank_b(i, j) − K)` where ranks
/// start at 1 for the nearest non-self point.
fn rank_penalty(a: &DistanceMatrix, b: &DistanceMatrix, k: usize) -> f64 {
    let n = a.n;
    let mut by_a = Vec::with_capacity(n);
    let mut by_b = Vec::with_capacity(n);
    let mut rank_b = vec![0usize; n];
    let mut total = 0usize;
    for i in 0..n {
        order(a, i, &mut by_a);
        order(b, i, &mut by_b);
        for (r, &j) in by_b.iter().enumerate() {
            rank_b[j] = r + 1;
        }
        total += by_a[..k].iter().map(|&j| rank_b[j].saturating_sub(k)).sum::<usize>();
    }
    total as f64
}

fn score(a: &DistanceMatrix, b: &DistanceMatrix, k: usize) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::ShapeMismatch(alloc::format!("{} vs {} points", a.n, b.n)));
    }
    check_k(a.n, k)?;
    let n = a.n as f64;
    let kf = k as f64;
    let norm = 2.0 / (n * kf * (2.0 * n - 3.0 * kf - 1.0));
    Ok(1.0 - norm * rank_penalty(a, b, k))
}

/// Continuity: neighbours in the original space that moved away in the
/// embedding, penalised by their embedding rank beyond `k`.
pub fn continuity(original: &DistanceMatrix, embedded: &DistanceMatrix, k: usize) -> Result<f64> {
    score(original, embedded, k)
}

/// Trustworthiness: embedding neighbours that were far apart originally.
pub fn trustworthiness(original: &DistanceMatrix, embedded: &DistanceMatrix, k: usize) -> Result<f64> {
    score(embedded, original, k)
}

/// `[x, y]ᵀ = M · [z_x, z_y, 1]ᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    pub matrix: [[f64; 3]; 2],
}

impl AffineTransform {
    pub const IDENTITY: Self = Self { matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] };

    pub fn apply(&self, z: [f64; 2]) -> [f64; 2] {
        let m = &self.matrix;
        [m[0][0] * z[0] + m[0][1] * z[1] + m[0][2], m[1][0] * z[0] + m[1][1] * z[1] + m[1][2]]
    }

    pub fn is_finite(&self) -> bool {
        self.matrix.iter().flatten().all(|v| v.is_finite())
    }
}

/// Least-squares affine map from chart to ground truth, solved by a
/// Householder QR of the `N × 3` homogeneous chart matrix.
pub fn fit_affine(chart: &[[f64; 2]], gt: &[[f64; 2]]) -> Result<AffineTransform> {
    if chart.len() != gt.len() {
        return Err(Error::ShapeMismatch(alloc::format!("{} chart points, {} positions", chart.len(), gt.len())));
    }
    let n = chart.len();
    if n < 3 {
        return Err(Error::DegenerateChart);
    }
    // Column-major copies: a[c] is column c, rhs[c] is target coordinate c.
    let mut a = [vec![0.0; n], vec![0.0; n], vec![1.0; n]];
    for (r, z) in chart.iter().enumerate() {
        a[0][r] = z[0];
        a[1][r] = z[1];
    }
    let mut rhs = [gt.iter().map(|p| p[0]).collect::<Vec<_>>(), gt.iter().map(|p| p[1]).collect::<Vec<_>>()];
    let scale = a.iter().map(|c| c.iter().fold(0.0, |m: f64, v| m.max(v.abs()))).fold(0.0, f64::max);
    let mut r = [[0.0; 3]; 3];
    for c in 0..3 {
        let norm = math::sqrt(a[c][c..].iter().map(|v| v * v).sum());
        if !(norm > 1e-12 * scale) {
            return Err(Error::DegenerateChart);
        }
        let alpha = if a[c][c] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[c][c..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv > 0.0 {
            let reflect = |col: &mut [f64]| {
                let f = 2.0 * v.iter().zip(col.iter()).map(|(x, y)| x * y).sum::<f64>() / vv;
                for (y, x) in col.iter_mut().zip(&v) {
                    *y -= f * x;
                }
            };
            for col in a.iter_mut().skip(c) {
                reflect(&mut col[c..]);
            }
            for col in rhs.iter_mut() {
                reflect(&mut col[c..]);
            }
        }
        for (row, rr) in r.iter_mut().enumerate().take(c + 1) {
            rr[c] = a[c][row];
        }
    }
    if (0..3).any(|c| !(math::abs(r[c][c]) > 1e-10 * scale.max(1.0))) {
        return Err(Error::DegenerateChart);
    }
    let mut matrix = [[0.0; 3]; 2];
    for (out, b) in matrix.iter_mut().zip(&rhs) {
        for c in (0..3).rev() {
            let s: f64 = (c + 1..3).map(|j| r[c][j] * out[j]).sum();
            out[c] = (b[c] - s) / r[c][c];
        }
    }
    let t = AffineTransform { matrix };
    if !t.is_finite() {
        return Err(Error::DegenerateChart);
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionErrors {
    pub mae: f64,
    pub ce90: f64,
    pub errors: Vec<f64>,
}

/// Percentile `q ∈ [0, 1]` with linear interpolation between order
/// statistics at position `q · (n − 1)`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = math::floor(pos) as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn position_errors(chart: &[[f64; 2]], transform: &AffineTransform, gt: &[[f64; 2]]) -> Result<PositionErrors> {
    if chart.len() != gt.len() {
        return Err(Error::ShapeMismatch(alloc::format!("{} chart points, {} positions", chart.len(), gt.len())));
    }
    let errors: Vec<f64> = chart
        .iter()
        .zip(gt)
        .map(|(z, p)| {
            let q = transform.apply(*z);
            math::hypot(q[0] - p[0], q[1] - p[1])
        })
        .collect();
    let mae = if errors.is_empty() { f64::NAN } else { errors.iter().sum::<f64>() / errors.len() as f64 };
    Ok(PositionErrors { mae, ce90: percentile(&errors, 0.9), errors })
}

/// Scores for one chart on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub split: String,
    pub ct: f64,
    pub tw: f64,
    pub k_neighbors: usize,
    pub mae: f64,
    pub ce90: f64,
    pub transform: AffineTransform,
    pub n: usize,
    /// CT/TW against ground-truth Euclidean distances.
    pub ct_gt: Option<f64>,
    pub tw_gt: Option<f64>,
}

/// Score `chart` against `original` (usually the pairwise CIR matrix) and
/// ground truth, using an already fitted `transform`.
pub fn evaluate(
    method: &str,
    split: &str,
    chart: &[[f64; 2]],
    gt: &[[f64; 2]],
    original: &DistanceMatrix,
    transform: &AffineTransform,
    k: usize,
) -> Result<EvalReport> {
    let emb = DistanceMatrix::euclidean(chart);
    let truth = DistanceMatrix::euclidean(gt);
    let pos = position_errors(chart, transform, gt)?;
    Ok(EvalReport {
        method: method.into(),
        split: split.into(),
        ct: continuity(original, &emb, k)?,
        tw: trustworthiness(original, &emb, k)?,
        k_neighbors: k,
        mae: pos.mae,
        ce90: pos.ce90,
        transform: *transform,
        n: chart.len(),
        ct_gt: Some(continuity(&truth, &emb, k)?),
        tw_gt: Some(trustworthiness(&truth, &emb, k)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MatrixKind;
    use proptest::prelude::*;

    /// Direct evaluation of the continuity sum with ranks counted per pair.
    pub(crate) fn brute_ct(orig: &DistanceMatrix, emb: &DistanceMatrix, k: usize) -> f64 {
        let n = orig.n;
        let before = |d: &DistanceMatrix, i: usize, l: usize, j: usize| d.get(i, l) < d.get(i, j) || (d.get(i, l) == d.get(i, j) && l < j);
        let rank = |d: &DistanceMatrix, i: usize, j: usize| 1 + (0..n).filter(|&l| l != i && l != j && before(d, i, l, j)).count();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                if j != i && rank(orig, i, j) <= k {
                    sum += (rank(emb, i, j) as f64 - k as f64).max(0.0);
                }
            }
        }
        let (nf, kf) = (n as f64, k as f64);
        1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * sum
    }

    fn random_points(seed: u64, n: usize) -> Vec<[f64; 2]> {
        let mut s = seed;
        let mut next = || {
            s = crate::rng::mix(s);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n).map(|_| [next() * 10.0, next() * 10.0]).collect()
    }

    #[test]
    fn identical_matrices_score_one() {
        let d = DistanceMatrix::euclidean(&random_points(1, 40));
        assert_eq!(continuity(&d, &d, 2).unwrap(), 1.0);
        assert_eq!(trustworthiness(&d, &d, 2).unwrap(), 1.0);
    }

    #[test]
    fn adversarial_reversal_n5() {
        let orig = DistanceMatrix::euclidean(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [4.0, 0.0]]);
        let emb = DistanceMatrix::euclidean(&[[4.0, 0.0], [0.0, 0.0], [3.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let ct = continuity(&orig, &emb, 2).unwrap();
        assert!((ct - brute_ct(&orig, &emb, 2)).abs() < 1e-12);
        assert!(ct < 1.0);
    }

    #[test]
    fn k_bounds() {
        let d = DistanceMatrix::euclidean(&random_points(2, 10));
        assert!(continuity(&d, &d, 5).is_ok());
        assert!(matches!(continuity(&d, &d, 6), Err(Error::NeighborhoodSize { k: 6, n: 10 })));
        assert!(continuity(&d, &d, 0).is_err());
        assert_eq!(default_k(2000), 100);
        assert_eq!(default_k(10), 1);
    }

    #[test]
    fn affine_identity_and_rigid() {
        let gt = random_points(3, 30);
        let t = fit_affine(&gt, &gt).unwrap();
        for (a, b) in t.matrix.iter().flatten().zip(AffineTransform::IDENTITY.matrix.iter().flatten()) {
            assert!((a - b).abs() < 1e-9);
        }
        let (c, s) = (0.6f64, 0.8f64);
        let chart: Vec<[f64; 2]> = gt.iter().map(|p| [2.5 * (c * p[0] - s * p[1]) + 7.0, 2.5 * (s * p[0] + c * p[1]) - 3.0]).collect();
        let t = fit_affine(&chart, &gt).unwrap();
        assert!(position_errors(&chart, &t, &gt).unwrap().mae <= 1e-6);
    }

    #[test]
    fn collinear_chart_is_degenerate() {
        let chart: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 2.0 * i as f64]).collect();
        let gt = random_points(4, 10);
        assert!(matches!(fit_affine(&chart, &gt), Err(Error::DegenerateChart)));
        assert!(matches!(fit_affine(&chart[..2], &gt[..2]), Err(Error::DegenerateChart)));
    }

    #[test]
    fn injected_offset() {
        let gt = random_points(5, 20);
        let shifted: Vec<[f64; 2]> = gt.iter().map(|p| [p[0] + 1.0, p[1]]).collect();
        let e = position_errors(&shifted, &AffineTransform::IDENTITY, &gt).unwrap();
        assert!((e.mae - 1.0).abs() < 1e-12);
        let perfect = position_errors(&gt, &AffineTransform::IDENTITY, &gt).unwrap();
        assert_eq!((perfect.mae, perfect.ce90), (0.0, 0.0));
    }

    #[test]
    fn noisy_fit_matches_normal_equations() {
        let gt = random_points(6, 80);
        let noise = random_points(7, 80);
        let chart: Vec<[f64; 2]> = gt.iter().zip(&noise).map(|(p, e)| [0.3 * p[0] + 0.1 * p[1] + 0.05 * e[0], -0.2 * p[0] + 0.4 * p[1] + 0.05 * e[1]]).collect();
        let t = fit_affine(&chart, &gt).unwrap();
        let a = nalgebra::DMatrix::from_fn(80, 3, |r, c| if c < 2 { chart[r][c] } else { 1.0 });
        let b = nalgebra::DMatrix::from_fn(80, 2, |r, c| gt[r][c]);
        let ata = a.transpose() * &a;
        let x = ata.lu().solve(&(a.transpose() * b)).unwrap();
        for r in 0..2 {
            for c in 0..3 {
                assert!((t.matrix[r][c] - x[(c, r)]).abs() < 1e-8, "{r},{c}");
            }
        }
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.9), 4.6);
        assert_eq!(percentile(&[7.0], 0.9), 7.0);
        assert!(percentile(&[], 0.9).is_nan());
    }

    fn matrix(vals: &[f64], n: usize) -> DistanceMatrix {
        let mut it = vals.iter().copied();
        DistanceMatrix::from_fn(n, MatrixKind::Pairwise, |_, _| it.next().unwrap_or(0.0))
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 5usize..30, seed in 0u64..1000, kk in 1usize..20, quantized in any::<bool>()) {
            let k = kk.min(n / 2).max(1);
            let mut vals = random_points(seed, n * n).into_iter().map(|p| p[0]).collect::<Vec<_>>();
            if quantized {
                for v in &mut vals {
                    *v = v.round();
                }
            }
            let a = matrix(&vals, n);
            let b = matrix(&vals[n * n / 2..], n);
            let ct = continuity(&a, &b, k).unwrap();
            let tw = trustworthiness(&a, &b, k).unwrap();
            prop_assert!((ct - brute_ct(&a, &b, k)).abs() <= 1e-12);
            prop_assert!((tw - brute_ct(&b, &a, k)).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&ct) && (0.0..=1.0).contains(&tw));
            prop_assert_eq!(tw, continuity(&b, &a, k).unwrap());
        }

        #[test]
        fn monotone_transform_invariance(n in 5usize..40, seed in 0u64..1000) {
            let a = DistanceMatrix::euclidean(&random_points(seed, n));
            let b = DistanceMatrix::euclidean(&random_points(seed + 1, n));
            let mut sq = b.clone();
            sq.values.iter_mut().for_each(|v| *v *= *v);
            let k = default_k(n);
            prop_assert_eq!(continuity(&a, &b, k).unwrap(), continuity(&a, &sq, k).unwrap());
            prop_assert_eq!(trustworthiness(&a, &b, k).unwrap(), trustworthiness(&a, &sq, k).unwrap());
        }

        #[test]
        fn affine_prewarp_invariance(seed in 0u64..1000, m in proptest::array::uniform6(-3.0f64..3.0)) {
            prop_assume!((m[0] * m[4] - m[1] * m[3]).abs() > 0.1);
            let gt = random_points(seed, 50);
            let noise = random_points(seed + 7, 50);
            let chart: Vec<[f64; 2]> = gt.iter().zip(&noise).map(|(p, e)| [p[0] + 0.3 * e[0], p[1] - 0.2 * e[1]]).collect();
            let warped: Vec<[f64; 2]> = chart.iter().map(|z| [m[0] * z[0] + m[1] * z[1] + m[2], m[3] * z[0] + m[4] * z[1] + m[5]]).collect();
            let e1 = position_errors(&chart, &fit_affine(&chart, &gt).unwrap(), &gt).unwrap().mae;
            let e2 = position_errors(&warped, &fit_affine(&warped, &gt).unwrap(), &gt).unwrap().mae;
            prop_assert!((e1 - e2).abs() <= 1e-9);
        }

        #[test]
        fn ce90_matches_sorted_order_statistics(v in proptest::collection::vec(0.0f64..100.0, 1..200)) {
            let mut s = v.clone();
            s.sort_by(f64::total_cmp);
            let pos = 0.9 * (s.len() - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            let want = s[lo] * (1.0 - (pos - lo as f64)) + s[hi] * (pos - lo as f64);
            prop_assert!((percentile(&v, 0.9) - want).abs() <= 1e-9);
        }
    }
}
