#![allow(dead_code)]

use ghrelax::FiniteMetricSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Euclidean distances of `n` uniform points in the unit square.
pub fn cloud(n: usize, seed: u64) -> FiniteMetricSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
    FiniteMetricSpace::from_point_cloud(&pts).unwrap()
}

pub fn shuffled(x: &FiniteMetricSpace, seed: u64) -> (FiniteMetricSpace, Vec<usize>) {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (x.reindexed(&order).unwrap(), order)
}

/// `½ (1/n² Σ |d_X − d_Y|^p)^{1/p}` for the identity correspondence.
pub fn aligned_p_mean(x: &FiniteMetricSpace, y: &FiniteMetricSpace, p: f64) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (x.dist(i, j) - y.dist(i, j)).abs().powf(p);
        }
    }
    0.5 * (s / (n * n) as f64).powf(1.0 / p)
}
