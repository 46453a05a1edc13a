mod common;

use common::{cloud, shuffled};
use ghrelax::oracle::exact_gh_exhaustive;
use ghrelax::{distortion_of_matching, exact_gh, exact_gh_bijective, Matching};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn branch_and_bound_matches_enumeration(s1 in 0u64..10_000, s2 in 0u64..10_000, n in 1usize..=3, m in 1usize..=3) {
        let (x, y) = (cloud(n, s1), cloud(m, s2 + 10_000));
        let fast = exact_gh(&x, &y).unwrap();
        let slow = exact_gh_exhaustive(&x, &y).unwrap();
        prop_assert!((fast.value - slow.value).abs() < 1e-12);
        let m = Matching::from_pairs(&x, &y, fast.argmin.clone());
        prop_assert!(m.is_correspondence());
        prop_assert!((m.distortion - fast.value).abs() < 1e-12);
    }

    #[test]
    fn symmetric_and_zero_on_isometric_copies(s1 in 0u64..10_000, s2 in 0u64..10_000, n in 2usize..=4) {
        let (x, y) = (cloud(n, s1), cloud(n, s2 + 10_000));
        prop_assert!((exact_gh(&x, &y).unwrap().value - exact_gh(&y, &x).unwrap().value).abs() < 1e-12);
        let (z, _) = shuffled(&x, s2);
        prop_assert_eq!(exact_gh(&x, &z).unwrap().value, 0.0);
        prop_assert_eq!(exact_gh_bijective(&x, &z).unwrap().value, 0.0);
    }

    #[test]
    fn bijections_bound_the_distance_from_above(s1 in 0u64..10_000, s2 in 0u64..10_000, n in 2usize..=4) {
        let (x, y) = (cloud(n, s1), cloud(n, s2 + 10_000));
        let exact = exact_gh(&x, &y).unwrap().value;
        let bij = exact_gh_bijective(&x, &y).unwrap();
        prop_assert!(exact <= bij.value + 1e-12);
        let rev: Vec<usize> = (0..n).rev().collect();
        let some = Matching::from_map(&x, &y, &rev);
        prop_assert!(exact <= distortion_of_matching(&x, &y, &some) + 1e-12);
    }

    #[test]
    fn triangle_inequality(s1 in 0u64..10_000, s2 in 0u64..10_000, s3 in 0u64..10_000) {
        let (x, y, w) = (cloud(3, s1), cloud(4, s2 + 10_000), cloud(3, s3 + 20_000));
        let (xy, yw, xw) = (exact_gh(&x, &y).unwrap().value, exact_gh(&y, &w).unwrap().value, exact_gh(&x, &w).unwrap().value);
        prop_assert!(xw <= xy + yw + 1e-12);
    }
}
