mod common;

use common::{cloud, shuffled};
use ghrelax::relaxed::{relaxed_distance, FeasibleSetKind};
use ghrelax::{exact_gh, gh_match, GhMatchConfig, SolverConfig};
use proptest::prelude::*;

#[test]
fn recovers_a_planted_permutation_at_thirty_points() {
    let x = cloud(30, 5);
    let (y, order) = shuffled(&x, 6);
    let r = gh_match(&x, &y, &GhMatchConfig::default()).unwrap();
    assert!(r.bijective);
    assert_eq!(r.upper_bound, 0.0);
    assert!(r.constraint_violation <= 1e-5, "{}", r.constraint_violation);
    assert!(r.sparsity > 0.99, "{}", r.sparsity);
    let map = r.matching.map().unwrap();
    for (k, &o) in order.iter().enumerate() {
        assert_eq!(map[o], k);
    }
}

#[test]
fn penalty_schedule_and_determinism() {
    let (x, y) = (cloud(6, 1), cloud(6, 2));
    let cfg = GhMatchConfig::default();
    let a = gh_match(&x, &y, &cfg).unwrap();
    let b = gh_match(&x, &y, &cfg).unwrap();
    assert_eq!(a.y, b.y);
    assert_eq!(a.matching, b.matching);
    for (k, rec) in a.trajectory.iter().enumerate() {
        assert_eq!(rec.sigma, cfg.sigma0 * cfg.mu.powi(k as i32));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10, ..ProptestConfig::default() })]

    #[test]
    fn sandwich(s1 in 0u64..10_000, s2 in 0u64..10_000, n in 2usize..=4) {
        let (x, y) = (cloud(n, s1), cloud(n, s2 + 10_000));
        let exact = exact_gh(&x, &y).unwrap().value;
        let r = gh_match(&x, &y, &GhMatchConfig::default()).unwrap();
        prop_assert!(r.matching.is_bijective());
        prop_assert!(exact <= r.upper_bound + 1e-9);
        let lower = relaxed_distance(&x, &y, FeasibleSetKind::GH, 1.0, &SolverConfig::default()).unwrap().value;
        prop_assert!(lower <= exact + 1e-5);
        prop_assert!(r.y.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
