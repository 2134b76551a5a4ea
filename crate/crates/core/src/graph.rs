//! Distance matrices, k-NN graphs and shortest-path geodesics.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::csi::{cir_distance, AlignedTensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Pairwise,
    Geodesic,
    Euclidean,
}

/// Dense symmetric `n × n` matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub n: usize,
    /// Row-major.
    pub values: Vec<f64>,
    pub kind: MatrixKind,
}

impl DistanceMatrix {
    pub fn zeros(n: usize, kind: MatrixKind) -> Self {
        Self { n, values: vec![0.0; n * n], kind }
    }

    /// Build from a symmetric function evaluated once per unordered pair.
    pub fn from_fn(n: usize, kind: MatrixKind, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n, kind);
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                m.values[i * n + j] = v;
                m.values[j * n + i] = v;
            }
        }
        m
    }

    /// Euclidean distances between 2-D points.
    pub fn euclidean(points: &[[f64; 2]]) -> Self {
        Self::from_fn(points.len(), MatrixKind::Euclidean, |i, j| {
            crate::math::hypot(points[i][0] - points[j][0], points[i][1] - points[j][1])
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Upper-triangle entries in row order.
    pub fn upper(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| self.get(i, j)))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.get(i, i) == 0.0 && (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// `D[i][j] = cir_distance(tensors[i], tensors[j])`.
pub fn pairwise_matrix(tensors: &[AlignedTensor]) -> Result<DistanceMatrix> {
    if tensors.len() < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 tensors, got {}", tensors.len())));
    }
    let shape = tensors[0].shape();
    if let Some(i) = tensors.iter().position(|t| t.shape() != shape || t.sample_rate != tensors[0].sample_rate) {
        return Err(Error::ShapeMismatch(format!(
            "tensor {i} has shape {:?}, tensor 0 has {shape:?}",
            tensors[i].shape()
        )));
    }
    let n = tensors.len();
    let mut m = DistanceMatrix::zeros(n, MatrixKind::Pairwise);
    for i in 0..n {
        for j in i + 1..n {
            let v = cir_distance(&tensors[i], &tensors[j])?;
            m.values[i * n + j] = v;
            m.values[j * n + i] = v;
        }
    }
    Ok(m)
}

/// Undirected weighted graph as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub n: usize,
    pub k: usize,
    /// `adjacency[i]` holds `(j, weight)` sorted by `j`.
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl NeighborGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i != j {
                adjacency[i].push((j, w));
                adjacency[j].push((i, w));
            }
        }
        for a in &mut adjacency {
            a.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
            a.dedup_by_key(|e| e.0);
        }
        Self { n, k: 0, adjacency }
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.adjacency[i].binary_search_by_key(&j, |e| e.0).ok().map(|p| self.adjacency[i][p].1)
    }
}

/// The `k` nearest neighbours of `i` by `(distance, index)`.
fn nearest(d: &DistanceMatrix, i: usize, k: usize, scratch: &mut Vec<usize>) {
    scratch.clear();
    scratch.extend((0..d.n).filter(|&j| j != i));
    let row = d.row(i);
    let cmp = |a: &usize, b: &usize| row[*a].total_cmp(&row[*b]).then(a.cmp(b));
    if k < scratch.len() {
        scratch.select_nth_unstable_by(k - 1, cmp);
        scratch.truncate(k);
    }
    scratch.sort_by(cmp);
}

/// Union-symmetrised k-NN graph; edge weights are the matrix entries.
pub fn knn_graph(d: &DistanceMatrix, k: usize) -> Result<NeighborGraph> {
    if k == 0 || k >= d.n {
        return Err(Error::NeighborCount { k, n: d.n });
    }
    let mut edges = Vec::with_capacity(d.n * k);
    let mut scratch = Vec::with_capacity(d.n);
    for i in 0..d.n {
        nearest(d, i, k, &mut scratch);
        edges.extend(scratch.iter().map(|&j| (i, j, d.get(i, j))));
    }
    let mut g = NeighborGraph::from_edges(d.n, &edges);
    g.k = k;
    Ok(g)
}

/// Connected components, each sorted, ordered by smallest member.
pub fn connected_components(g: &NeighborGraph) -> Vec<Vec<usize>> {
    let mut label = vec![usize::MAX; g.n];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for s in 0..g.n {
        if label[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = vec![s];
        label[s] = id;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &g.adjacency[u] {
                if label[v] == usize::MAX {
                    label[v] = id;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Smallest `k` whose k-NN graph is connected, if any.
pub fn min_connecting_k(d: &DistanceMatrix) -> Option<usize> {
    let connected = |k| knn_graph(d, k).map(|g| connected_components(&g).len() == 1).unwrap_or(false);
    let (mut lo, mut hi) = (1, d.n.checked_sub(1)?);
    if hi == 0 || !connected(hi) {
        return None;
    }
    // Connectivity is monotone in k: the k-NN graph grows with k.
    while lo < hi {
        let mid = (lo + hi) / 2;
        if connected(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

#[derive(PartialEq)]
struct State {
    dist: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `source`; writes shortest-path lengths into `dist`.
pub fn shortest_paths(g: &NeighborGraph, source: usize, dist: &mut [f64]) {
    dist.fill(f64::INFINITY);
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(State { dist: 0.0, node: source });
    while let Some(State { dist: du, node: u }) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        for &(v, w) in &g.adjacency[u] {
            let nd = du + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(State { dist: nd, node: v });
            }
        }
    }
}

/// All-pairs shortest paths. Row `i` comes from the run started at `i`; the
/// lower triangle mirrors the upper one so the result is exactly symmetric.
pub fn geodesic_matrix(g: &NeighborGraph) -> Result<DistanceMatrix> {
    let comps = connected_components(g);
    if comps.len() > 1 {
        return Err(Error::Disconnected { sizes: comps.iter().map(Vec::len).collect() });
    }
    let n = g.n;
    let mut m = DistanceMatrix::zeros(n, MatrixKind::Geodesic);
    let mut dist = vec![0.0; n];
    for i in 0..n {
        shortest_paths(g, i, &mut dist);
        for j in i + 1..n {
            m.values[i * n + j] = dist[j];
            m.values[j * n + i] = dist[j];
        }
    }
    Ok(m)
}
