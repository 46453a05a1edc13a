//! Exact values by enumeration, for small instances.

use serde::Serialize;
use thiserror::Error;

use crate::distortion::DistortionTensor;
use crate::metric::FiniteMetricSpace;
use crate::relaxed::lift_weights;

/// Largest `n·m` accepted by the relation enumerators.
pub const MAX_RELATION_CELLS: usize = 20;
/// Largest `n` accepted by the permutation enumerator.
pub const MAX_BIJECTION_POINTS: usize = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance too large for enumeration: n = {n}, m = {m} (limit {limit})")]
    TooLarge { n: usize, m: usize, limit: usize },
    #[error("bijections need equal cardinalities, got n = {n}, m = {m}")]
    CardinalityMismatch { n: usize, m: usize },
    #[error("order p must be at least 1, got {0}")]
    InvalidP(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: f64,
    /// Optimal correspondence as sorted `(i, j)` pairs.
    pub argmin: Vec<(usize, usize)>,
    /// Candidates reaching a full evaluation.
    pub enumerated_count: u64,
}

fn check_cells(n: usize, m: usize) -> Result<(), OracleError> {
    if n * m > MAX_RELATION_CELLS {
        return Err(OracleError::TooLarge { n, m, limit: MAX_RELATION_CELLS });
    }
    Ok(())
}

struct RelationSearch<'a> {
    gamma: &'a DistortionTensor,
    n: usize,
    m: usize,
    prune: bool,
    chosen: Vec<usize>,
    row_count: Vec<usize>,
    best: f64,
    best_set: Vec<usize>,
    leaves: u64,
}

impl RelationSearch<'_> {
    fn run(&mut self, cell: usize, running: f64) {
        let (n, m) = (self.n, self.m);
        if cell == n * m {
            if self.row_count.iter().all(|&c| c > 0) && self.covers_columns() {
                self.leaves += 1;
                if running < self.best {
                    self.best = running;
                    self.best_set = self.chosen.clone();
                }
            }
            return;
        }
        let (i, j) = (cell / m, cell % m);
        let row_ends = j + 1 == m;

        // exclude first, so ties keep the lexicographically smallest relation
        if !(row_ends && self.row_count[i] == 0) {
            self.run(cell + 1, running);
        }

        let mut with = running;
        for &other in &self.chosen {
            with = with.max(self.gamma.get(cell, other));
        }
        if self.prune && with >= self.best {
            return;
        }
        self.chosen.push(cell);
        self.row_count[i] += 1;
        self.run(cell + 1, with);
        self.row_count[i] -= 1;
        self.chosen.pop();
    }

    fn covers_columns(&self) -> bool {
        let mut seen = vec![false; self.m];
        for &c in &self.chosen {
            seen[c % self.m] = true;
        }
        seen.into_iter().all(|s| s)
    }
}

fn relation_search(x: &FiniteMetricSpace, y: &FiniteMetricSpace, prune: bool) -> Result<OracleResult, OracleError> {
    let (n, m) = (x.len(), y.len());
    check_cells(n, m)?;
    let gamma = DistortionTensor::build(x, y, f64::INFINITY);
    let mut s = RelationSearch {
        gamma: &gamma,
        n,
        m,
        prune,
        chosen: Vec::with_capacity(n * m),
        row_count: vec![0; n],
        best: f64::INFINITY,
        best_set: Vec::new(),
        leaves: 0,
    };
    s.run(0, 0.0);
    Ok(OracleResult {
        value: 0.5 * s.best,
        argmin: s.best_set.iter().map(|&c| (c / m, c % m)).collect(),
        enumerated_count: s.leaves,
    })
}

/// `d_GH(X, Y) = ½ min_R max_{(i,j),(i',j') ∈ R} |d_X(i,i') − d_Y(j,j')|`
/// over all correspondences, by branch and bound.
pub fn exact_gh(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<OracleResult, OracleError> {
    relation_search(x, y, true)
}

/// Same value as [`exact_gh`] without pruning, so `enumerated_count` is the
/// number of correspondences.
pub fn exact_gh_exhaustive(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<OracleResult, OracleError> {
    relation_search(x, y, false)
}

/// Minimum distortion over bijections, `½ min_σ max |d_X(i,i') − d_Y(σi,σi')|`.
pub fn exact_gh_bijective(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<OracleResult, OracleError> {
    let (n, m) = (x.len(), y.len());
    if n != m {
        return Err(OracleError::CardinalityMismatch { n, m });
    }
    if n > MAX_BIJECTION_POINTS {
        return Err(OracleError::TooLarge { n, m, limit: MAX_BIJECTION_POINTS });
    }

    struct Perm<'a> {
        x: &'a FiniteMetricSpace,
        y: &'a FiniteMetricSpace,
        map: Vec<usize>,
        used: Vec<bool>,
        best: f64,
        best_map: Vec<usize>,
        leaves: u64,
    }
    impl Perm<'_> {
        fn run(&mut self, i: usize, running: f64) {
            let n = self.used.len();
            if i == n {
                self.leaves += 1;
                if running < self.best {
                    self.best = running;
                    self.best_map = self.map.clone();
                }
                return;
            }
            for j in 0..n {
                if self.used[j] {
                    continue;
                }
                let mut with = running;
                for (i2, &j2) in self.map.iter().enumerate() {
                    with = with.max((self.x.dist(i, i2) - self.y.dist(j, j2)).abs());
                }
                if with >= self.best {
                    continue;
                }
                self.used[j] = true;
                self.map.push(j);
                self.run(i + 1, with);
                self.map.pop();
                self.used[j] = false;
            }
        }
    }

    let mut s = Perm {
        x,
        y,
        map: Vec::with_capacity(n),
        used: vec![false; n],
        best: f64::INFINITY,
        best_map: Vec::new(),
        leaves: 0,
    };
    s.run(0, 0.0);
    Ok(OracleResult {
        value: 0.5 * s.best,
        argmin: s.best_map.iter().copied().enumerate().collect(),
        enumerated_count: s.leaves,
    })
}

/// How the rank-one sum objective is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `½ (Σ / max(n,m)²)^{1/p}`, the convention of the relaxed distances.
    MaxSquared,
    /// `½ Σ^{1/p}`.
    Unnormalized,
}

/// Minimum of the p-sum objective over rank-one lifts of correspondences,
/// with the lift weights of [`crate::relaxed::lift_weights`]. Relations
/// without a rank-one lift are skipped.
pub fn exact_gh_p_rank1(x: &FiniteMetricSpace, y: &FiniteMetricSpace, p: f64) -> Result<OracleResult, OracleError> {
    exact_gh_p_rank1_with(x, y, p, Normalization::MaxSquared)
}

pub fn exact_gh_p_rank1_with(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    p: f64,
    normalization: Normalization,
) -> Result<OracleResult, OracleError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(OracleError::InvalidP(p));
    }
    let (n, m) = (x.len(), y.len());
    check_cells(n, m)?;
    let gamma = DistortionTensor::build(x, y, p);
    let cells = n * m;
    let mut best = f64::INFINITY;
    let mut best_pairs = Vec::new();
    let mut count = 0u64;
    // cells in row-major order are the bits of `mask`, most significant first,
    // so increasing `mask` visits relations lexicographically
    for mask in 0u32..(1u32 << cells) {
        let pairs: Vec<(usize, usize)> =
            (0..cells).filter(|&c| mask >> (cells - 1 - c) & 1 == 1).map(|c| (c / m, c % m)).collect();
        let Ok(w) = lift_weights(&pairs, n, m) else { continue };
        count += 1;
        let support: Vec<usize> = (0..cells).filter(|&c| w[c] > 0.0).collect();
        let mut obj = 0.0;
        for &a in &support {
            for &b in &support {
                obj += gamma.get(a, b) * w[a] * w[b];
            }
        }
        if obj < best {
            best = obj;
            best_pairs = pairs;
        }
    }
    let scale = match normalization {
        Normalization::MaxSquared => {
            let big_n = n.max(m) as f64;
            big_n * big_n
        }
        Normalization::Unnormalized => 1.0,
    };
    Ok(OracleResult { value: 0.5 * (best / scale).powf(1.0 / p), argmin: best_pairs, enumerated_count: count })
}
