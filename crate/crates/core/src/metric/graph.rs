use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FiniteMetricSpace, MetricError};

/// An undirected simple graph on vertices `0..vertex_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    vertex_count: usize,
    edges: BTreeSet<(usize, usize)>,
}

/// How the non-edge constant `K` of a graph metric is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphMetricMode {
    /// Require `1 < K ≤ 2`, the range where the result is a true metric.
    Strict,
    /// Accept any `K > 0`; for graphs with a path of two edges between
    /// non-adjacent vertices and `K > 2` the result is only a pseudo-distance
    /// matrix and triangle validation is skipped.
    Literal,
}

impl SimpleGraph {
    /// Edges are unordered pairs; self-loops, out-of-range endpoints and
    /// duplicates are rejected.
    pub fn new(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self, MetricError> {
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u == v || u >= vertex_count || v >= vertex_count {
                return Err(MetricError::InvalidEdge(u, v));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(MetricError::DuplicateEdge(u, v));
            }
        }
        Ok(Self { vertex_count, edges: set })
    }

    /// Erdős–Rényi `G(n, p)` with a seeded generator.
    pub fn random(vertex_count: usize, edge_probability: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = BTreeSet::new();
        for u in 0..vertex_count {
            for v in (u + 1)..vertex_count {
                if rng.gen_bool(edge_probability) {
                    edges.insert((u, v));
                }
            }
        }
        Self { vertex_count, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// The graph with vertex `v` renamed to `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let edges = self
            .edges
            .iter()
            .map(|&(u, v)| (perm[u].min(perm[v]), perm[u].max(perm[v])))
            .collect();
        Self { vertex_count: self.vertex_count, edges }
    }

    /// An isomorphic copy under a seeded random relabelling, with the
    /// permutation used.
    pub fn shuffled(&self, seed: u64) -> (Self, Vec<usize>) {
        let mut perm: Vec<usize> = (0..self.vertex_count).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        (self.relabeled(&perm), perm)
    }

    /// Distance 1 on edges, `k` on non-edges, 0 on the diagonal.
    pub fn to_metric(&self, k: f64, mode: GraphMetricMode) -> Result<FiniteMetricSpace, MetricError> {
        let valid = match mode {
            GraphMetricMode::Strict => k > 1.0 && k <= 2.0,
            GraphMetricMode::Literal => k.is_finite() && k > 0.0,
        };
        if !valid {
            return Err(MetricError::InvalidK(k));
        }
        let n = self.vertex_count;
        if n == 0 {
            return Err(MetricError::Empty);
        }
        let mut dist = vec![k; n * n];
        for i in 0..n {
            dist[i * n + i] = 0.0;
        }
        for &(u, v) in &self.edges {
            dist[u * n + v] = 1.0;
            dist[v * n + u] = 1.0;
        }
        match mode {
            GraphMetricMode::Strict => FiniteMetricSpace::from_flat(n, dist, 0.0),
            GraphMetricMode::Literal => FiniteMetricSpace::from_flat_unchecked_triangle(n, dist),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_and_path() {
        let tri = SimpleGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let x = tri.to_metric(2.0, GraphMetricMode::Strict).unwrap();
        assert_eq!(x.to_rows(), vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]);

        let path = SimpleGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let y = path.to_metric(2.0, GraphMetricMode::Strict).unwrap();
        assert_eq!(y.to_rows(), vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]);
    }

    #[test]
    fn k_range() {
        let path = SimpleGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.to_metric(10.0, GraphMetricMode::Strict), Err(MetricError::InvalidK(10.0)));
        assert_eq!(path.to_metric(1.0, GraphMetricMode::Strict), Err(MetricError::InvalidK(1.0)));
        let literal = path.to_metric(10.0, GraphMetricMode::Literal).unwrap();
        assert_eq!(literal.dist(0, 2), 10.0);
    }

    #[test]
    fn bad_edges() {
        assert_eq!(SimpleGraph::new(3, &[(1, 1)]), Err(MetricError::InvalidEdge(1, 1)));
        assert_eq!(SimpleGraph::new(3, &[(0, 3)]), Err(MetricError::InvalidEdge(0, 3)));
        assert_eq!(SimpleGraph::new(3, &[(0, 1), (1, 0)]), Err(MetricError::DuplicateEdge(1, 0)));
    }

    #[test]
    fn isomorphic_cycles_share_distance_multisets() {
        let c1 = SimpleGraph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let c2 = SimpleGraph::new(4, &[(0, 2), (2, 1), (1, 3), (3, 0)]).unwrap();
        let sorted = |g: &SimpleGraph| {
            let mut v = g.to_metric(2.0, GraphMetricMode::Strict).unwrap().as_slice().to_vec();
            v.sort_by(f64::total_cmp);
            v
        };
        assert_eq!(sorted(&c1), sorted(&c2));
    }

    #[test]
    fn relabelling_conjugates_the_metric() {
        let g = SimpleGraph::random(7, 0.4, 11);
        let (h, perm) = g.shuffled(5);
        let dg = g.to_metric(2.0, GraphMetricMode::Strict).unwrap();
        let dh = h.to_metric(2.0, GraphMetricMode::Strict).unwrap();
        for u in 0..7 {
            for v in 0..7 {
                assert_eq!(dg.dist(u, v), dh.dist(perm[u], perm[v]));
            }
        }
    }
}
