//! Square linear assignment by the Hungarian method (shortest augmenting
//! paths with potentials, `O(n³)`).

/// Row `i` is assigned column `result[i]`, minimizing `Σ cost[i][result[i]]`.
/// Among equal-cost alternatives the search prefers lower column indices.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    assert!(cost.iter().all(|r| r.len() == n), "cost matrix must be square");
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is a virtual start.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0; n];
    for j in 1..=n {
        result[owner[j] - 1] = j - 1;
    }
    result
}

/// Maximum-weight perfect matching on a square weight matrix.
pub fn max_weight_assignment(weight: &[Vec<f64>]) -> Vec<usize> {
    let top = weight.iter().flatten().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let cost: Vec<Vec<f64>> = weight.iter().map(|r| r.iter().map(|&w| top - w).collect()).collect();
    min_cost_assignment(&cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_min(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + rec(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.len()])
    }

    #[test]
    fn ties_resolve_to_identity() {
        assert_eq!(max_weight_assignment(&[vec![0.25, 0.25], vec![0.25, 0.25]]), vec![0, 1]);
        let uniform = vec![vec![1.0 / 3.0; 3]; 3];
        assert_eq!(max_weight_assignment(&uniform), vec![0, 1, 2]);
    }

    #[test]
    fn permutation_matrix_is_recovered() {
        let perm = [2, 0, 3, 1];
        let w: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| (perm[i] == j) as u8 as f64).collect()).collect();
        assert_eq!(max_weight_assignment(&w), perm);
    }

    #[test]
    fn matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for n in 1..=6 {
            for _ in 0..20 {
                let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0.0..10.0)).collect()).collect();
                let a = min_cost_assignment(&cost);
                let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
                assert!((total - brute_force_min(&cost)).abs() < 1e-9);
                let mut seen = a.clone();
                seen.sort();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
            }
        }
    }
}
