//! Small dense eigen-solvers.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math;
use crate::rng::{self, Purpose};

/// Eigen-decomposition of a symmetric `n × n` matrix (row-major) by cyclic
/// Jacobi rotations. Returns eigenvalues in descending order and the matching
/// unit eigenvectors.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i * n + j] * a[i * n + j]).sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (math::abs(theta) + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = idx.iter().map(|&i| a[i * n + i]).collect();
    let vectors = idx.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    (values, vectors)
}

/// Modified Gram-Schmidt in place. Columns that collapse below `tol` times
/// their original norm are zeroed.
pub fn orthonormalize(cols: &mut [Vec<f64>]) {
    for i in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(i);
        let c = &mut rest[0];
        let before = math::sqrt(math::dot(c, c));
        for q in done.iter() {
            let r = math::dot(q, c);
            for (x, y) in c.iter_mut().zip(q) {
                *x -= r * y;
            }
        }
        let norm = math::sqrt(math::dot(c, c));
        if norm > 1e-10 * before && norm > 0.0 {
            c.iter_mut().for_each(|x| *x /= norm);
        } else {
            c.iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

/// Leading eigenpairs of a symmetric linear operator by block subspace
/// iteration with Rayleigh-Ritz.
///
/// `apply(v, out)` must write `A v` into `out`. Returns `count` Ritz pairs
/// ordered by descending eigenvalue, taken from a block of `block` vectors
/// (the block converges to the largest-magnitude part of the spectrum).
pub fn top_eigen(
    dim: usize,
    count: usize,
    block: usize,
    max_iter: usize,
    tol: f64,
    mut apply: impl FnMut(&[f64], &mut [f64]),
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let b = block.max(count).min(dim);
    let count = count.min(b);
    let mut rng = rng::stream(0, Purpose::Embedding, dim as u64);
    let mut q: Vec<Vec<f64>> = (0..b).map(|_| (0..dim).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
    let mut aq = vec![vec![0.0; dim]; b];
    let mut values = vec![0.0; b];
    let mut vectors = q.clone();
    for _ in 0..max_iter.max(1) {
        orthonormalize(&mut q);
        for (v, out) in q.iter().zip(aq.iter_mut()) {
            apply(v, out);
        }
        let mut h = vec![0.0; b * b];
        for i in 0..b {
            for j in i..b {
                let x = 0.5 * (math::dot(&q[i], &aq[j]) + math::dot(&q[j], &aq[i]));
                h[i * b + j] = x;
                h[j * b + i] = x;
            }
        }
        let (theta, u) = symmetric_eigen(&h, b);
        let combine = |basis: &[Vec<f64>], coef: &[f64]| {
            let mut out = vec![0.0; dim];
            for (c, col) in coef.iter().zip(basis) {
                for (o, x) in out.iter_mut().zip(col) {
                    *o += c * x;
                }
            }
            out
        };
        vectors = u.iter().map(|c| combine(&q, c)).collect();
        let next: Vec<Vec<f64>> = u.iter().map(|c| combine(&aq, c)).collect();
        let scale = theta.iter().fold(0.0f64, |m, t| m.max(math::abs(*t)));
        let converged = (0..count).all(|i| {
            let r: f64 = next[i].iter().zip(&vectors[i]).map(|(a, v)| (a - theta[i] * v) * (a - theta[i] * v)).sum();
            math::sqrt(r) <= tol * scale.max(f64::MIN_POSITIVE)
        });
        values = theta;
        q = next;
        if converged || scale == 0.0 {
            break;
        }
    }
    values.truncate(count);
    vectors.truncate(count);
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_matches_nalgebra() {
        let n = 7;
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| ((i * 3 + j * 5) % 11) as f64 + ((j * 3 + i * 5) % 11) as f64);
        let (vals, vecs) = symmetric_eigen(m.as_slice(), n);
        let mut want: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        want.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in vals.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9 * want[0].abs());
        }
        for (l, v) in vals.iter().zip(&vecs) {
            let x = nalgebra::DVector::from_column_slice(v);
            let r = &m * &x - x.clone() * *l;
            assert!(r.norm() < 1e-9 * want[0].abs());
        }
    }

    #[test]
    fn subspace_iteration_finds_top_pairs() {
        let n = 30;
        let diag: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let (vals, vecs) = top_eigen(n, 2, 6, 500, 1e-12, |v, out| {
            for i in 0..n {
                out[i] = diag[i] * v[i];
            }
        });
        assert!((vals[0] - 1.0).abs() < 1e-10 && (vals[1] - 0.5).abs() < 1e-10);
        assert!((vecs[0][0].abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn orthonormalize_zeroes_dependent_columns() {
        let mut cols = vec![vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]];
        orthonormalize(&mut cols);
        assert_eq!(cols[1], vec![0.0, 0.0, 0.0]);
        assert!((math::dot(&cols[2], &cols[2]) - 1.0).abs() < 1e-12);
    }
}
