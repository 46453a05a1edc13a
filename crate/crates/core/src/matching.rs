use serde::Serialize;

use crate::metric::FiniteMetricSpace;

/// A hard correspondence between `X` (`n` points) and `Y` (`m` points),
/// stored as sorted `(i, j)` pairs, with its distortion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matching {
    pub n: usize,
    pub m: usize,
    pub pairs: Vec<(usize, usize)>,
    /// `½ max |d_X(i,i') − d_Y(j,j')|` over pairs of pairs.
    pub distortion: f64,
}

impl Matching {
    /// The graph of `map: X → Y`.
    pub fn from_map(x: &FiniteMetricSpace, y: &FiniteMetricSpace, map: &[usize]) -> Self {
        assert_eq!(map.len(), x.len(), "map must be total on X");
        let pairs: Vec<_> = map.iter().copied().enumerate().collect();
        Self::from_pairs(x, y, pairs)
    }

    pub fn from_pairs(x: &FiniteMetricSpace, y: &FiniteMetricSpace, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        assert!(pairs.iter().all(|&(i, j)| i < x.len() && j < y.len()), "pair index out of range");
        let distortion = relation_distortion(x, y, &pairs);
        Self { n: x.len(), m: y.len(), pairs, distortion }
    }

    /// `map[i]` when every point of `X` has exactly one partner.
    pub fn map(&self) -> Option<Vec<usize>> {
        if self.pairs.len() != self.n {
            return None;
        }
        self.pairs.iter().enumerate().map(|(k, &(i, j))| (k == i).then_some(j)).collect()
    }

    pub fn is_bijective(&self) -> bool {
        self.n == self.m && self.covers_x() && self.covers_y() && self.pairs.len() == self.n
    }

    /// Whether the pairs form a correspondence (cover both spaces).
    pub fn is_correspondence(&self) -> bool {
        self.covers_x() && self.covers_y()
    }

    fn covers_x(&self) -> bool {
        let mut seen = vec![false; self.n];
        self.pairs.iter().for_each(|&(i, _)| seen[i] = true);
        seen.into_iter().all(|s| s)
    }

    fn covers_y(&self) -> bool {
        let mut seen = vec![false; self.m];
        self.pairs.iter().for_each(|&(_, j)| seen[j] = true);
        seen.into_iter().all(|s| s)
    }
}

/// `½ max |d_X(i,i') − d_Y(j,j')|` over all pairs of pairs of a relation.
pub fn relation_distortion(x: &FiniteMetricSpace, y: &FiniteMetricSpace, pairs: &[(usize, usize)]) -> f64 {
    let mut worst = 0.0_f64;
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for &(i2, j2) in &pairs[a + 1..] {
            worst = worst.max((x.dist(i, i2) - y.dist(j, j2)).abs());
        }
    }
    0.5 * worst
}

/// Distortion of `matching`, recomputed from the two spaces. For a
/// bijection this is an upper bound on the Gromov–Hausdorff distance.
pub fn distortion_of_matching(x: &FiniteMetricSpace, y: &FiniteMetricSpace, matching: &Matching) -> f64 {
    relation_distortion(x, y, &matching.pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(d: f64) -> FiniteMetricSpace {
        FiniteMetricSpace::new(vec![vec![0.0, d], vec![d, 0.0]]).unwrap()
    }

    #[test]
    fn identity_on_itself() {
        let x = FiniteMetricSpace::from_point_cloud(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let m = Matching::from_map(&x, &x, &[0, 1, 2]);
        assert_eq!(distortion_of_matching(&x, &x, &m), 0.0);
        assert!(m.is_bijective());
        assert_eq!(m.map(), Some(vec![0, 1, 2]));
    }

    #[test]
    fn two_point_bijections() {
        let (x, y) = (two_point(1.0), two_point(3.0));
        for map in [[0, 1], [1, 0]] {
            assert_eq!(Matching::from_map(&x, &y, &map).distortion, 1.0);
        }
    }

    #[test]
    fn non_bijective_maps() {
        let (x, y) = (two_point(1.0), two_point(3.0));
        let m = Matching::from_map(&x, &y, &[0, 0]);
        assert!(!m.is_bijective() && !m.is_correspondence());
        assert_eq!(m.distortion, 0.5);
        let r = Matching::from_pairs(&x, &y, vec![(0, 0), (0, 1), (1, 1)]);
        assert!(r.is_correspondence());
        assert_eq!(r.map(), None);
    }
}
