//! Labelled benchmark of planted near-isometric classes.

use ghrelax::FiniteMetricSpace;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub per_class: usize,
    pub points: usize,
    /// Dimension of the prototype point clouds.
    pub dim: usize,
    /// Per-entry noise as a fraction of `Δ / (2n)`, with `Δ` the smallest
    /// distance gap of the prototype. Values below 0.5 keep every member
    /// within `Δ / (2n)` of its prototype after metric repair.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { classes: 4, per_class: 6, points: 8, dim: 2, noise: 0.4, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct LabelledSpaces {
    pub spaces: Vec<FiniteMetricSpace>,
    pub labels: Vec<String>,
}

/// Each class is a random point cloud; members are shuffled copies with
/// bounded noise on every distance.
pub fn synthetic_benchmark(cfg: &SyntheticConfig) -> LabelledSpaces {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut spaces = Vec::with_capacity(cfg.classes * cfg.per_class);
    let mut labels = Vec::with_capacity(spaces.capacity());
    for c in 0..cfg.classes {
        let proto = loop {
            let pts: Vec<Vec<f64>> = (0..cfg.points).map(|_| (0..cfg.dim).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
            let space = FiniteMetricSpace::from_point_cloud(&pts).expect("finite coordinates");
            if cfg.points < 2 || space.is_generic(1e-6).generic {
                break space;
            }
        };
        let gap = proto.is_generic(0.0).min_gap;
        let magnitude = if gap.is_finite() { cfg.noise * gap / (2.0 * cfg.points as f64) } else { 0.0 };
        for _ in 0..cfg.per_class {
            let mut order: Vec<usize> = (0..cfg.points).collect();
            order.shuffle(&mut rng);
            let member = proto.reindexed(&order).expect("a permutation").perturb(magnitude, rng.gen());
            spaces.push(member);
            labels.push(format!("class{c}"));
        }
    }
    LabelledSpaces { spaces, labels }
}
