//! Finite metric spaces and the constructions used throughout the crate.
//!
//! Pseudometrics (distinct points at distance zero) are first-class: padding a
//! space with repeated points is how spaces of different cardinalities are
//! brought to a common size.

mod graph;
mod io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use graph::{GraphMetricMode, SimpleGraph};
pub use io::{parse_distance_csv, parse_graph, parse_point_cloud, write_distance_csv, write_graph};

/// Default triangle/symmetry tolerance, relative to the largest entry.
pub const DEFAULT_METRIC_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("empty input")]
    Empty,
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("negative entry at ({0}, {1})")]
    NegativeEntry(usize, usize),
    #[error("asymmetric matrix: d({0},{1}) != d({1},{0})")]
    AsymmetricMatrix(usize, usize),
    #[error("nonzero diagonal entry at ({0}, {0})")]
    NonzeroDiagonal(usize),
    #[error("triangle inequality violated: d({0},{2}) > d({0},{1}) + d({1},{2})")]
    TriangleViolation(usize, usize, usize),
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch { index: usize, found: usize, expected: usize },
    #[error("invalid graph constant K = {0}: strict metric mode needs 1 < K <= 2")]
    InvalidK(f64),
    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("bad padding target: {0}")]
    BadTarget(String),
    #[error("index {index} out of range for a space of {n} points")]
    BadIndex { index: usize, n: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A finite (pseudo)metric space given by its distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
}

/// Result of [`FiniteMetricSpace::is_generic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Genericity {
    pub generic: bool,
    /// Smallest nonzero entry of `Γ(X, X)`, i.e. the smallest positive gap
    /// between two distance values (zero included). `+∞` for a single point.
    pub min_gap: f64,
}

/// A subset of a parent space covering it within `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonNet {
    pub indices: Vec<usize>,
    pub epsilon: f64,
}

impl EpsilonNet {
    /// Exhaustive coverage check against the parent space.
    pub fn covers(&self, space: &FiniteMetricSpace) -> bool {
        (0..space.len()).all(|x| self.indices.iter().any(|&s| space.dist(x, s) <= self.epsilon))
    }
}

impl FiniteMetricSpace {
    /// Validates `rows` as a pseudometric with the default tolerance.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        Self::validate(&rows, DEFAULT_METRIC_TOL)
    }

    /// Checks symmetry, zero diagonal and the triangle inequality within
    /// `tol · max_entry`. Zero off-diagonal entries are accepted.
    ///
    /// The stored matrix is the exact symmetrisation of the input with a zeroed
    /// diagonal.
    pub fn validate(rows: &[Vec<f64>], tol: f64) -> Result<Self, MetricError> {
        let n = rows.len();
        let flat = flatten_square(rows)?;
        let space = Self::from_flat_checked(n, flat, tol)?;
        Ok(space)
    }

    /// Builds a space from a row-major `n × n` slice, validating it.
    pub fn from_flat(n: usize, dist: Vec<f64>, tol: f64) -> Result<Self, MetricError> {
        if n == 0 {
            return Err(MetricError::Empty);
        }
        if dist.len() != n * n {
            return Err(MetricError::NotSquare { row: 0, len: dist.len(), expected: n * n });
        }
        Self::from_flat_checked(n, dist, tol)
    }

    fn from_flat_checked(n: usize, mut dist: Vec<f64>, tol: f64) -> Result<Self, MetricError> {
        check_entries(n, &dist)?;
        let scale = dist.iter().fold(0.0_f64, |m, &v| m.max(v));
        let tau = tol * scale;
        for i in 0..n {
            if dist[i * n + i].abs() > tau {
                return Err(MetricError::NonzeroDiagonal(i));
            }
            for j in (i + 1)..n {
                if (dist[i * n + j] - dist[j * n + i]).abs() > tau {
                    return Err(MetricError::AsymmetricMatrix(i, j));
                }
            }
        }
        for i in 0..n {
            dist[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let v = 0.5 * (dist[i * n + j] + dist[j * n + i]);
                dist[i * n + j] = v;
                dist[j * n + i] = v;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let dij = dist[i * n + j];
                for k in 0..n {
                    if dist[i * n + k] > dij + dist[j * n + k] + tau {
                        return Err(MetricError::TriangleViolation(i, j, k));
                    }
                }
            }
        }
        Ok(Self { n, dist, labels: None })
    }

    /// Accepts a square, symmetric, finite, nonnegative matrix with zero
    /// diagonal without checking the triangle inequality. Used for the
    /// large-`K` graph pseudo-distances.
    pub fn from_flat_unchecked_triangle(n: usize, dist: Vec<f64>) -> Result<Self, MetricError> {
        if n == 0 {
            return Err(MetricError::Empty);
        }
        if dist.len() != n * n {
            return Err(MetricError::NotSquare { row: 0, len: dist.len(), expected: n * n });
        }
        check_entries(n, &dist)?;
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(MetricError::NonzeroDiagonal(i));
            }
            for j in (i + 1)..n {
                if dist[i * n + j] != dist[j * n + i] {
                    return Err(MetricError::AsymmetricMatrix(i, j));
                }
            }
        }
        Ok(Self { n, dist, labels: None })
    }

    /// Euclidean distances between points of equal dimension.
    pub fn from_point_cloud(points: &[Vec<f64>]) -> Result<Self, MetricError> {
        let first = points.first().ok_or(MetricError::Empty)?;
        let k = first.len();
        for (index, p) in points.iter().enumerate() {
            if p.len() != k {
                return Err(MetricError::DimensionMismatch { index, found: p.len(), expected: k });
            }
            if let Some(c) = p.iter().position(|v| !v.is_finite()) {
                return Err(MetricError::NonFinite(index, c));
            }
        }
        let n = points.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(Self { n, dist, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, MetricError> {
        if labels.len() != self.n {
            return Err(MetricError::NotSquare { row: 0, len: labels.len(), expected: self.n });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    /// Row-major distance matrix.
    pub fn as_slice(&self) -> &[f64] {
        &self.dist
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().fold(0.0_f64, |m, &v| m.max(v))
    }

    /// Relabels points: point `k` of the result is point `order[k]` of `self`.
    /// `order` may repeat indices, which produces a pseudometric.
    pub fn reindexed(&self, order: &[usize]) -> Result<Self, MetricError> {
        if order.is_empty() {
            return Err(MetricError::Empty);
        }
        if let Some(&index) = order.iter().find(|&&i| i >= self.n) {
            return Err(MetricError::BadIndex { index, n: self.n });
        }
        let m = order.len();
        let mut dist = vec![0.0; m * m];
        for (a, &i) in order.iter().enumerate() {
            for (b, &j) in order.iter().enumerate() {
                dist[a * m + b] = self.dist(i, j);
            }
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| order.iter().map(|&i| l[i].clone()).collect());
        Ok(Self { n: m, dist, labels })
    }

    /// All distances multiplied by `c ≥ 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            dist: self.dist.iter().map(|v| v * c).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Greedy farthest-point ε-net starting from point 0. Covers the space at
    /// radius `epsilon`; minimality is not guaranteed.
    pub fn epsilon_net(&self, epsilon: f64) -> EpsilonNet {
        let mut indices = vec![0];
        let mut nearest: Vec<f64> = self.row(0).to_vec();
        loop {
            let (far, &gap) = nearest
                .iter()
                .enumerate()
                .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            if gap <= epsilon {
                break;
            }
            indices.push(far);
            for (x, d) in nearest.iter_mut().enumerate() {
                *d = d.min(self.dist(x, far));
            }
        }
        EpsilonNet { indices, epsilon }
    }

    /// Pads to `target_n` points by repeating existing ones.
    ///
    /// `indices`, when given, lists the parent index of every point of the
    /// result and must mention each parent point at least once. The default
    /// keeps the original points in order and appends copies round-robin.
    pub fn pad_with_repeats(&self, target_n: usize, indices: Option<&[usize]>) -> Result<Self, MetricError> {
        if target_n < self.n {
            return Err(MetricError::BadTarget(format!(
                "target {target_n} is smaller than the space size {}",
                self.n
            )));
        }
        let order: Vec<usize> = match indices {
            Some(list) => {
                if list.len() != target_n {
                    return Err(MetricError::BadTarget(format!(
                        "multiset has {} entries, expected {target_n}",
                        list.len()
                    )));
                }
                let mut seen = vec![false; self.n];
                for &i in list {
                    if i >= self.n {
                        return Err(MetricError::BadIndex { index: i, n: self.n });
                    }
                    seen[i] = true;
                }
                if let Some(missing) = seen.iter().position(|s| !s) {
                    return Err(MetricError::BadTarget(format!("point {missing} is not represented")));
                }
                list.to_vec()
            }
            None => (0..target_n).map(|k| k % self.n).collect(),
        };
        self.reindexed(&order)
    }

    /// Uniform noise in `[−magnitude, magnitude]` on every off-diagonal pair,
    /// clamped at zero, then repaired into a metric by shortest-path closure.
    /// Deterministic for a given seed; the identity when `magnitude == 0`.
    pub fn perturb(&self, magnitude: f64, seed: u64) -> Self {
        if magnitude <= 0.0 {
            return self.clone();
        }
        let n = self.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dist = self.dist.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let noise = rng.gen_range(-magnitude..=magnitude);
                let v = (dist[i * n + j] + noise).max(0.0);
                dist[i * n + j] = v;
                dist[j * n + i] = v;
            }
        }
        shortest_path_closure(n, &mut dist);
        Self { n, dist, labels: self.labels.clone() }
    }

    /// Whether all off-diagonal distances are positive and pairwise distinct
    /// (gaps larger than `tol`), together with the minimal gap `Δ`.
    pub fn is_generic(&self, tol: f64) -> Genericity {
        let n = self.n;
        let mut values: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2 + 1);
        values.push(0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                values.push(self.dist(i, j));
            }
        }
        values.sort_by(f64::total_cmp);
        let mut generic = true;
        let mut min_gap = f64::INFINITY;
        for w in values.windows(2) {
            let gap = w[1] - w[0];
            if gap > tol {
                min_gap = min_gap.min(gap);
            } else {
                generic = false;
            }
        }
        Genericity { generic, min_gap }
    }
}

fn flatten_square(rows: &[Vec<f64>]) -> Result<Vec<f64>, MetricError> {
    let n = rows.len();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    let mut flat = Vec::with_capacity(n * n);
    for (row, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(MetricError::NotSquare { row, len: r.len(), expected: n });
        }
        flat.extend_from_slice(r);
    }
    Ok(flat)
}

fn check_entries(n: usize, dist: &[f64]) -> Result<(), MetricError> {
    for (k, &v) in dist.iter().enumerate() {
        if !v.is_finite() {
            return Err(MetricError::NonFinite(k / n, k % n));
        }
        if v < 0.0 {
            return Err(MetricError::NegativeEntry(k / n, k % n));
        }
    }
    Ok(())
}

/// Floyd–Warshall in place.
pub(crate) fn shortest_path_closure(n: usize, dist: &mut [f64]) {
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            for j in 0..n {
                let via = dik + dist[k * n + j];
                if via < dist[i * n + j] {
                    dist[i * n + j] = via;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> FiniteMetricSpace {
        FiniteMetricSpace::from_point_cloud(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn smallest_metric_is_valid() {
        let x = FiniteMetricSpace::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(x.len(), 2);
    }

    #[test]
    fn rejects_asymmetry_and_triangle_violation() {
        assert_eq!(
            FiniteMetricSpace::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]]),
            Err(MetricError::AsymmetricMatrix(0, 1))
        );
        assert_eq!(
            FiniteMetricSpace::new(vec![
                vec![0.0, 1.0, 3.0],
                vec![1.0, 0.0, 1.0],
                vec![3.0, 1.0, 0.0]
            ]),
            Err(MetricError::TriangleViolation(0, 1, 2))
        );
        assert_eq!(
            FiniteMetricSpace::new(vec![vec![0.5, 1.0], vec![1.0, 0.0]]),
            Err(MetricError::NonzeroDiagonal(0))
        );
        assert_eq!(
            FiniteMetricSpace::new(vec![vec![0.0, f64::NAN], vec![f64::NAN, 0.0]]),
            Err(MetricError::NonFinite(0, 1))
        );
    }

    #[test]
    fn pseudometrics_are_accepted() {
        let x = FiniteMetricSpace::new(vec![
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(x.dist(0, 1), 0.0);
    }

    #[test]
    fn point_cloud_distances() {
        let x = FiniteMetricSpace::from_point_cloud(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(x.dist(0, 1), 5.0);
        let one = FiniteMetricSpace::from_point_cloud(&[vec![7.0]]).unwrap();
        assert_eq!(one.as_slice(), &[0.0]);

        let sq = square();
        let mut d: Vec<f64> = (0..4).flat_map(|i| ((i + 1)..4).map(move |j| (i, j))).map(|(i, j)| sq.dist(i, j)).collect();
        d.sort_by(f64::total_cmp);
        let r2 = 2.0_f64.sqrt();
        assert_eq!(d, vec![1.0, 1.0, 1.0, 1.0, r2, r2]);
        assert!(FiniteMetricSpace::from_flat(4, sq.as_slice().to_vec(), 0.0).is_ok());

        assert_eq!(
            FiniteMetricSpace::from_point_cloud(&[vec![0.0], vec![1.0, 2.0]]),
            Err(MetricError::DimensionMismatch { index: 1, found: 2, expected: 1 })
        );
        assert_eq!(FiniteMetricSpace::from_point_cloud(&[]), Err(MetricError::Empty));
    }

    #[test]
    fn epsilon_nets() {
        let sq = square();
        assert_eq!(sq.epsilon_net(10.0).indices, vec![0]);
        let all = sq.epsilon_net(0.0);
        assert_eq!(all.indices.len(), 4);
        let net = sq.epsilon_net(1.0);
        assert_eq!(net.indices, vec![0, 2]);
        assert!(net.covers(&sq));
        // no single corner covers the square at radius 1
        for c in 0..4 {
            assert!(!EpsilonNet { indices: vec![c], epsilon: 1.0 }.covers(&sq));
        }

        let dup = sq.pad_with_repeats(6, None).unwrap();
        assert_eq!(dup.epsilon_net(0.0).indices.len(), 4);
    }

    #[test]
    fn padding() {
        let x = FiniteMetricSpace::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let p = x.pad_with_repeats(3, None).unwrap();
        assert_eq!(p.row(0), p.row(2));
        assert_eq!(x.pad_with_repeats(2, None).unwrap(), x);
        let y = x.pad_with_repeats(3, Some(&[0, 0, 1])).unwrap();
        assert_eq!(y.to_rows(), vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]);
        assert!(matches!(x.pad_with_repeats(1, None), Err(MetricError::BadTarget(_))));
        assert!(matches!(x.pad_with_repeats(3, Some(&[0, 0, 0])), Err(MetricError::BadTarget(_))));
    }

    #[test]
    fn perturbation() {
        let sq = square();
        assert_eq!(sq.perturb(0.0, 3), sq);
        let p = sq.perturb(0.05, 3);
        assert_eq!(p, sq.perturb(0.05, 3));
        assert!(FiniteMetricSpace::from_flat(4, p.as_slice().to_vec(), 0.0).is_ok());
        for (a, b) in p.as_slice().iter().zip(sq.as_slice()) {
            assert!((a - b).abs() <= 0.05 * 4.0 + 1e-12);
        }
    }

    #[test]
    fn genericity() {
        let x = FiniteMetricSpace::new(vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 3.0],
            vec![2.0, 3.0, 0.0],
        ])
        .unwrap();
        let g = x.is_generic(1e-12);
        assert!(g.generic);
        assert_eq!(g.min_gap, 1.0);
        assert!(!square().is_generic(1e-12).generic);
    }

    #[test]
    fn generic_survives_small_perturbation() {
        let x = FiniteMetricSpace::from_point_cloud(&[
            vec![0.0, 0.0],
            vec![1.0, 0.1],
            vec![0.3, 1.7],
            vec![2.2, 0.9],
        ])
        .unwrap();
        let g = x.is_generic(1e-12);
        assert!(g.generic);
        let mag = 0.99 * g.min_gap / (2.0 * x.len() as f64);
        for seed in 0..20 {
            assert!(x.perturb(mag, seed).is_generic(1e-12).generic);
        }
    }
}
