use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::index;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::NeighborGraph;
use crate::nncore::rng::{self, streams};
use crate::nncore::Matrix;
use crate::scalar::Scalar;
use crate::splice::LatentGroup;

/// Geodesic lengths from each landmark to every sample, for one latent group.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicTable<T> {
    pub group: LatentGroup,
    /// Sample indices of the landmarks; row `r` of `distances` belongs to
    /// `landmarks[r]`.
    pub landmarks: Vec<usize>,
    /// `landmarks x samples`.
    pub distances: Matrix<T>,
}

impl<T: Scalar> GeodesicTable<T> {
    pub fn n_samples(&self) -> usize {
        self.distances.cols()
    }

    pub fn n_landmarks(&self) -> usize {
        self.landmarks.len()
    }
}

#[derive(Clone, Copy)]
struct Entry<T> {
    dist: T,
    node: usize,
}

impl<T: Scalar> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Entry<T> {}

impl<T: Scalar> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Entry<T> {
    // Reversed so that `BinaryHeap` pops the smallest distance first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Single-source shortest-path lengths. Unreachable nodes get `+inf`.
pub fn dijkstra<T: Scalar>(graph: &NeighborGraph<T>, source: usize) -> Vec<T> {
    let n = graph.n_nodes();
    let mut dist = vec![T::infinity(); n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = T::zero();
    heap.push(Entry {
        dist: T::zero(),
        node: source,
    });
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in graph.neighbors(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry { dist: nd, node: v });
            }
        }
    }
    dist
}

/// Shortest-path lengths from every landmark to every node
/// (`landmarks x nodes`). Landmarks run in parallel.
pub fn geodesics<T: Scalar>(graph: &NeighborGraph<T>, landmarks: &[usize]) -> Result<Matrix<T>> {
    let n = graph.n_nodes();
    if let Some(&bad) = landmarks.iter().find(|&&l| l >= n) {
        return Err(Error::config(format!("landmark {bad} out of range for {n} nodes")));
    }
    let rows: Vec<Vec<T>> = landmarks.par_iter().map(|&l| dijkstra(graph, l)).collect();
    let data: Vec<T> = rows.into_iter().flatten().collect();
    Matrix::from_vec(landmarks.len(), n, data)
}

/// `min(count, n)` distinct sample indices drawn uniformly, in draw order.
pub fn choose_landmarks(n: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut r = rng::stream(seed, streams::LANDMARKS);
    index::sample(&mut r, n, count.min(n)).into_vec()
}

/// Landmark table for `group` over an already-built graph. Errors when some
/// node is unreachable from a landmark.
pub fn geodesic_table<T: Scalar>(
    graph: &NeighborGraph<T>,
    group: LatentGroup,
    landmarks: Vec<usize>,
) -> Result<GeodesicTable<T>> {
    let distances = geodesics(graph, &landmarks)?;
    if !distances.is_finite() {
        return Err(Error::Degenerate(format!(
            "graph for {group} is disconnected; geodesics are infinite"
        )));
    }
    Ok(GeodesicTable {
        group,
        landmarks,
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph() {
        let g = NeighborGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let d = geodesics(&g, &[0, 2]).unwrap();
        assert_eq!(d.row(0), &[0.0, 1.0, 2.0]);
        assert_eq!(d.row(1), &[2.0, 1.0, 0.0]);
    }

    #[test]
    fn unreachable_is_infinite() {
        let g = NeighborGraph::<f64>::from_edges(3, &[(0, 1, 1.0)]).unwrap();
        assert!(dijkstra::<f64>(&g, 0)[2].is_infinite());
        assert!(geodesic_table(&g, LatentGroup::PrivateA, vec![0]).is_err());
    }

    #[test]
    fn landmarks_are_distinct_and_seeded() {
        let a = choose_landmarks(100, 10, 4);
        let mut s = a.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 10);
        assert_eq!(a, choose_landmarks(100, 10, 4));
        assert_eq!(choose_landmarks(5, 500, 1).len(), 5);
    }
}
