use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nncore::{euclidean, sq_distances, Matrix};
use crate::scalar::Scalar;

/// Rows per distance block; bounds memory at `BLOCK x N` scalars.
const BLOCK: usize = 256;

/// Undirected weighted graph over sample indices.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborGraph<T> {
    /// Sorted by neighbor index, no duplicates, symmetric.
    adjacency: Vec<Vec<(usize, T)>>,
    k: usize,
    bridges: Vec<(usize, usize, T)>,
}

impl<T: Scalar> NeighborGraph<T> {
    /// Graph from an explicit undirected edge list. Repeated edges keep the
    /// smallest weight. No bridging is performed.
    pub fn from_edges(n: usize, edges: &[(usize, usize, T)]) -> Result<Self> {
        let mut maps: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); n];
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::config(format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            if !(w.is_finite() && w >= T::zero()) {
                return Err(Error::config(format!("edge ({a}, {b}) has invalid weight {w}")));
            }
            if a == b {
                continue;
            }
            for (u, v) in [(a, b), (b, a)] {
                let e = maps[u].entry(v).or_insert(w);
                if w < *e {
                    *e = w;
                }
            }
        }
        Ok(Self {
            adjacency: maps.into_iter().map(|m| m.into_iter().collect()).collect(),
            k: 0,
            bridges: Vec::new(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.len()
    }

    /// Neighbors per node before symmetrization (0 for explicit graphs).
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, T)] {
        &self.adjacency[node]
    }

    /// Edges added to connect components, as `(a, b, weight)` with `a < b`.
    pub fn bridges(&self) -> &[(usize, usize, T)] {
        &self.bridges
    }

    /// Undirected edges with `a < b`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::new();
        for (a, nb) in self.adjacency.iter().enumerate() {
            out.extend(nb.iter().filter(|&&(b, _)| b > a).map(|&(b, w)| (a, b, w)));
        }
        out
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<T> {
        let nb = &self.adjacency[a];
        nb.binary_search_by_key(&b, |&(j, _)| j).ok().map(|i| nb[i].1)
    }

    /// Component label per node (labels are the smallest node of each component).
    pub fn components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.n_nodes());
        for (a, b, _) in self.edges() {
            uf.union(a, b);
        }
        uf.labels()
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    fn insert(&mut self, a: usize, b: usize, w: T) {
        for (u, v) in [(a, b), (b, a)] {
            let nb = &mut self.adjacency[u];
            match nb.binary_search_by_key(&v, |&(j, _)| j) {
                Ok(i) => nb[i].1 = nb[i].1.min(w),
                Err(i) => nb.insert(i, (v, w)),
            }
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets; the smaller root survives.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }

    fn labels(&mut self) -> Vec<usize> {
        (0..self.parent.len()).map(|i| self.find(i)).collect()
    }
}

/// Upper bound on the rounding error of a GEMM-based squared distance.
pub(crate) fn gemm_slack<T: Scalar>(dim: usize, sq_norm_sum: T) -> T {
    T::of(16.0 * (dim as f64 + 4.0)) * T::epsilon() * sq_norm_sum + T::min_positive_value()
}

fn sq_norms<T: Scalar>(points: &Matrix<T>) -> Vec<T> {
    points.iter_rows().map(|r| r.iter().map(|&v| v * v).sum()).collect()
}

/// Indices of the `k` nearest rows for every row of `points`, ranked by
/// exact Euclidean distance with ties going to the lower index. The GEMM
/// distances only shortlist candidates; any row within rounding slack of the
/// k-th candidate is re-ranked exactly.
pub fn knn_indices<T: Scalar>(points: &Matrix<T>, k: usize) -> Result<Vec<Vec<(usize, T)>>> {
    let n = points.rows();
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    if n < k + 1 {
        return Err(Error::config(format!(
            "k = {k} needs at least {} points, got {n}",
            k + 1
        )));
    }
    let norms = sq_norms(points);
    let max_norm = norms.iter().copied().fold(T::zero(), T::max);
    let dim = points.cols();
    let starts: Vec<usize> = (0..n).step_by(BLOCK).collect();
    let blocks: Vec<Vec<Vec<(usize, T)>>> = starts
        .par_iter()
        .map(|&start| {
            let len = BLOCK.min(n - start);
            let block = points.row_range(start, len);
            let d2 = sq_distances(&block, points)?;
            let mut out = Vec::with_capacity(len);
            let mut scratch: Vec<T> = Vec::with_capacity(n);
            for r in 0..len {
                let i = start + r;
                let row = d2.row(r);
                scratch.clear();
                scratch.extend(row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v));
                let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
                let cut = *kth + gemm_slack(dim, norms[i] + max_norm);
                let mut cand: Vec<(usize, T)> = row
                    .iter()
                    .enumerate()
                    .filter(|&(j, &v)| j != i && v <= cut)
                    .map(|(j, _)| (j, euclidean(points.row(i), points.row(j))))
                    .collect();
                cand.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                cand.truncate(k);
                out.push(cand);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// Symmetrized k-nearest-neighbor graph with Euclidean edge weights.
///
/// Disconnected components are joined by repeatedly adding the shortest edge
/// between two different components; each such edge is recorded in
/// [`NeighborGraph::bridges`].
pub fn knn_graph<T: Scalar>(points: &Matrix<T>, k: usize) -> Result<NeighborGraph<T>> {
    if !points.is_finite() {
        return Err(Error::Degenerate("points contain non-finite values".into()));
    }
    let nn = knn_indices(points, k)?;
    let n = points.rows();
    let mut graph = NeighborGraph {
        adjacency: vec![Vec::new(); n],
        k,
        bridges: Vec::new(),
    };
    for (i, list) in nn.iter().enumerate() {
        for &(j, w) in list {
            graph.insert(i, j, w);
        }
    }
    bridge_components(points, &mut graph)?;
    Ok(graph)
}

/// Kruskal over components: the shortest edge between every pair of
/// components is found in one blocked pass, then edges are taken in order of
/// `(weight, a, b)` while they join distinct components. This adds exactly
/// the edges that repeatedly picking the globally shortest inter-component
/// edge would add.
fn bridge_components<T: Scalar>(points: &Matrix<T>, graph: &mut NeighborGraph<T>) -> Result<()> {
    let labels = graph.components();
    let mut roots: Vec<usize> = labels.clone();
    roots.sort_unstable();
    roots.dedup();
    if roots.len() <= 1 {
        return Ok(());
    }
    let comp_of: Vec<usize> = labels.iter().map(|l| roots.binary_search(l).unwrap()).collect();
    let n = points.rows();
    let starts: Vec<usize> = (0..n).step_by(BLOCK).collect();
    // (comp_a, comp_b) with comp_a < comp_b -> (approx d2, a, b).
    let partial: Vec<BTreeMap<(usize, usize), (T, usize, usize)>> = starts
        .par_iter()
        .map(|&start| {
            let len = BLOCK.min(n - start);
            let d2 = sq_distances(&points.row_range(start, len), points)?;
            let mut best: BTreeMap<(usize, usize), (T, usize, usize)> = BTreeMap::new();
            for r in 0..len {
                let i = start + r;
                let ci = comp_of[i];
                for (j, &v) in d2.row(r).iter().enumerate() {
                    let cj = comp_of[j];
                    if cj <= ci {
                        continue;
                    }
                    // Rows and columns are visited in increasing order, so a
                    // strict improvement is needed to replace the incumbent.
                    let e = best.entry((ci, cj)).or_insert((v, i, j));
                    if v < e.0 {
                        *e = (v, i, j);
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut best: BTreeMap<(usize, usize), (T, usize, usize)> = BTreeMap::new();
    for map in partial {
        for (key, cand) in map {
            let e = best.entry(key).or_insert(cand);
            if cand.0 < e.0 || (cand.0 == e.0 && (cand.1, cand.2) < (e.1, e.2)) {
                *e = cand;
            }
        }
    }
    let mut candidates: Vec<(T, usize, usize, usize, usize)> = best
        .into_iter()
        .map(|((ca, cb), (_, a, b))| {
            let w = euclidean(points.row(a), points.row(b));
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            (w, a, b, ca, cb)
        })
        .collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut uf = UnionFind::new(roots.len());
    for (w, a, b, ca, cb) in candidates {
        if uf.union(ca, cb) {
            graph.insert(a, b, w);
            graph.bridges.push((a, b, w));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_k1() {
        let p = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let g = knn_graph(&p, 1).unwrap();
        assert_eq!(g.edges(), vec![(0, 1, 1.0), (1, 2, 1.0)]);
        assert!(g.bridges().is_empty());
    }

    #[test]
    fn two_clusters_get_one_bridge() {
        let p = Matrix::from_rows(&[[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]]).unwrap();
        let g = knn_graph(&p, 1).unwrap();
        assert_eq!(g.bridges().len(), 1);
        let (a, b, w): (usize, usize, f64) = g.bridges()[0];
        assert_eq!((a, b), (1, 2));
        assert!((w - 9.9).abs() < 1e-12);
        assert!(g.is_connected());
    }

    #[test]
    fn ties_prefer_lower_index() {
        // Node 1 is equidistant from 0 and 2.
        let p = Matrix::from_rows(&[[0.0], [1.0], [2.0], [10.0]]).unwrap();
        let nn = knn_indices(&p, 1).unwrap();
        assert_eq!(nn[1][0].0, 0);
    }

    #[test]
    fn duplicates_give_zero_weight_edges() {
        let p = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0], [3.0, 1.0]]).unwrap();
        let g = knn_graph(&p, 1).unwrap();
        assert_eq!(g.weight(0, 1), Some(0.0));
        assert!(g.is_connected());
    }

    #[test]
    fn too_few_points() {
        let p = Matrix::<f64>::zeros(2, 1);
        assert!(knn_graph(&p, 2).is_err());
        assert!(knn_graph(&p, 0).is_err());
    }

    #[test]
    fn explicit_edges_keep_minimum() {
        let g = NeighborGraph::from_edges(3, &[(0, 1, 2.0), (1, 0, 1.5), (1, 2, 1.0)]).unwrap();
        assert_eq!(g.weight(1, 0), Some(1.5));
        assert_eq!(g.edges().len(), 2);
        assert!(NeighborGraph::from_edges(2, &[(0, 2, 1.0)]).is_err());
    }
}
