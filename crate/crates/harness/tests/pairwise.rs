use ghrelax::relaxed::FeasibleSetKind;
use ghrelax::{exact_gh, FiniteMetricSpace};
use ghrelax_harness::classify::nearest_neighbor_classify;
use ghrelax_harness::pairwise::{pairwise_distance_matrix, Method, PairwiseConfig};
use rand::{Rng, SeedableRng};

fn cloud(n: usize, seed: u64) -> FiniteMetricSpace {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
    FiniteMetricSpace::from_point_cloud(&pts).unwrap()
}

fn sdp_gh1() -> PairwiseConfig {
    PairwiseConfig::new(Method::Sdp { kind: FeasibleSetKind::GH, p: 1.0 })
}

#[test]
fn single_space() {
    let m = pairwise_distance_matrix(&[cloud(3, 0)], &sdp_gh1());
    assert_eq!(m.values, vec![vec![0.0]]);
    assert!(m.diagnostics.is_empty());
}

#[test]
fn isometric_copy_is_at_zero() {
    let x = cloud(4, 1);
    let copy = x.reindexed(&[2, 0, 3, 1]).unwrap();
    let m = pairwise_distance_matrix(&[x, copy, cloud(4, 2)], &sdp_gh1());
    assert!(m.values[0][1] <= 1e-6, "{}", m.values[0][1]);
    for i in 0..3 {
        assert_eq!(m.values[i][i], 0.0);
        for j in 0..3 {
            assert_eq!(m.values[i][j], m.values[j][i]);
        }
    }
    assert_eq!(m.diagnostics.iter().map(|d| (d.i, d.j)).collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
}

#[test]
fn relaxed_entries_stay_below_exact_entries() {
    let spaces: Vec<_> = (0..5).map(|s| cloud(4, 10 + s)).collect();
    let relaxed = pairwise_distance_matrix(&spaces, &sdp_gh1());
    let exact = pairwise_distance_matrix(&spaces, &PairwiseConfig::new(Method::Exact));
    for i in 0..5 {
        for j in 0..5 {
            assert!(relaxed.values[i][j] <= exact.values[i][j] + 1e-5);
            if i != j {
                assert_eq!(exact.values[i][j], exact_gh(&spaces[i], &spaces[j]).unwrap().value);
            }
        }
    }
}

#[test]
fn failures_are_recorded_per_pair() {
    // Reg needs equal cardinalities; the 3-vs-4 pairs fail, the others run
    let spaces = vec![cloud(3, 0), cloud(3, 1), cloud(4, 2)];
    let cfg = PairwiseConfig { jobs: 2, ..PairwiseConfig::new(Method::Sdp { kind: FeasibleSetKind::Reg, p: 1.0 }) };
    let m = pairwise_distance_matrix(&spaces, &cfg);
    assert_eq!(m.failures().count(), 2);
    assert!(m.values[0][1].is_finite());
    assert!(m.values[0][2].is_nan() && m.values[2][1].is_nan());
}

#[test]
fn classification_examples() {
    let l = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let two = nearest_neighbor_classify(&[vec![0.0, 1.0], vec![1.0, 0.0]], &l(&["a", "a"])).unwrap();
    assert_eq!(two.success_frequency, 1.0);

    let labels = l(&["a", "a", "a", "b", "b", "b"]);
    let m: Vec<Vec<f64>> = (0..6)
        .map(|i| (0..6).map(|j| if i == j { 0.0 } else if i / 3 == j / 3 { 0.01 * (i + j) as f64 } else { 1.0 }).collect())
        .collect();
    let r = nearest_neighbor_classify(&m, &labels).unwrap();
    assert_eq!(r.success_frequency, 1.0);
    assert!(r.items.iter().all(|it| it.correct));

    // ties go to the lowest index
    let tie = nearest_neighbor_classify(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]], &l(&["x", "y", "x"])).unwrap();
    assert_eq!(tie.items.iter().map(|it| it.nearest.unwrap()).collect::<Vec<_>>(), vec![1, 0, 0]);
    assert!((tie.success_frequency - 1.0 / 3.0).abs() < 1e-15);

    assert!(nearest_neighbor_classify(&[vec![0.0]], &l(&["a", "b"])).is_err());
}
