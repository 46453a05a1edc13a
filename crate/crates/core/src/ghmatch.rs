//! GHMatch: a projected augmented-Lagrangian method for
//!
//! ```text
//! min_y  yᵀ Γ^(p) y   s.t.  A y = 1,  0 ≤ y ≤ 1,
//! ```
//!
//! where `y ∈ R^{n²}` is a relaxed assignment and `A` takes row and column
//! sums. The final iterate is rounded to a map, so the result is an upper
//! bound on the Gromov–Hausdorff distance.

use serde::Serialize;
use thiserror::Error;

use crate::assignment::max_weight_assignment;
use crate::distortion::{DistortionTensor, GammaOperator, LazyGamma};
use crate::matching::Matching;
use crate::metric::FiniteMetricSpace;
use crate::relaxed::argmax;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GhMatchError {
    #[error("GHMatch needs |X| = |Y|, got {0} and {1}")]
    CardinalityMismatch(usize, usize),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GhMatchConfig {
    pub sigma0: f64,
    pub mu: f64,
    /// Every multiplier starts at this value.
    pub lambda0: f64,
    pub outer_iters: usize,
    /// Inner stopping tolerance on the projected gradient, relative to
    /// `1 + ‖∇L(y_start)‖_∞`.
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub p: f64,
    /// Snap entries within this distance of 0 or 1 after each outer step.
    pub threshold: Option<f64>,
    /// Stop the outer loop once `‖Ay − 1‖_∞` falls below this.
    pub violation_tol: f64,
    /// Materialize `Γ` up to this many points, generate it lazily beyond.
    pub dense_limit: usize,
}

impl Default for GhMatchConfig {
    fn default() -> Self {
        Self {
            sigma0: 5.0,
            mu: 10.0,
            lambda0: 1.0,
            outer_iters: 12,
            inner_tol: 1e-8,
            inner_max_iters: 1000,
            p: 1.0,
            threshold: None,
            violation_tol: 1e-8,
            dense_limit: 60,
        }
    }
}

impl GhMatchConfig {
    pub fn validate(&self) -> Result<(), GhMatchError> {
        let bad = |m: &str| Err(GhMatchError::BadConfig(m.into()));
        if !(self.sigma0 > 0.0) {
            return bad("sigma0 must be positive");
        }
        if !(self.mu > 1.0) {
            return bad("mu must exceed 1");
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return bad("p must be finite and at least 1");
        }
        if self.outer_iters == 0 || self.inner_max_iters == 0 {
            return bad("iteration counts must be positive");
        }
        if !(self.inner_tol > 0.0) {
            return bad("inner_tol must be positive");
        }
        if let Some(t) = self.threshold {
            if !(0.0..0.5).contains(&t) {
                return bad("threshold must lie in [0, 0.5)");
            }
        }
        Ok(())
    }
}

/// Row sums then column sums of an `n × n` matrix stored row-major.
#[derive(Debug, Clone, Copy)]
pub struct MarginalOperator {
    pub n: usize,
}

impl MarginalOperator {
    pub fn apply(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            for j in 0..n {
                let v = y[i * n + j];
                out[i] += v;
                out[n + j] += v;
            }
        }
    }

    pub fn adjoint(&self, w: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = w[i] + w[n + j];
            }
        }
    }

    /// `‖Ay − 1‖_∞`.
    pub fn violation(&self, y: &[f64]) -> f64 {
        let mut r = vec![0.0; 2 * self.n];
        self.apply(y, &mut r);
        r.iter().fold(0.0_f64, |m, v| m.max((v - 1.0).abs()))
    }
}

/// `f(y) = ½ yᵀHy + cᵀy` with `H` available through products.
pub trait BoxQuadratic {
    fn dim(&self) -> usize;
    fn hess_apply(&self, d: &[f64], out: &mut [f64]);
    fn linear(&self) -> &[f64];
}

#[derive(Debug, Clone)]
pub struct BoxQpResult {
    pub y: Vec<f64>,
    /// `½ yᵀHy + cᵀy` at `y`.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn projected_gradient_norm(y: &[f64], g: &[f64]) -> f64 {
    y.iter().zip(g).fold(0.0_f64, |m, (&yi, &gi)| m.max(((yi - gi).clamp(0.0, 1.0) - yi).abs()))
}

/// Projected gradient over `[0, 1]^d` with Barzilai–Borwein steps and
/// monotone Armijo backtracking. Stops when `‖P(y − ∇f) − y‖_∞ ≤ tol`.
pub fn box_qp_minimize<Q: BoxQuadratic + ?Sized>(q: &Q, start: &[f64], tol: f64, max_iters: usize) -> BoxQpResult {
    let d = q.dim();
    let c = q.linear();
    let mut y: Vec<f64> = start.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let mut g = vec![0.0; d];
    let mut hd = vec![0.0; d];
    let mut step = vec![0.0; d];
    let refresh = |y: &[f64], g: &mut Vec<f64>| {
        q.hess_apply(y, g);
        for (gi, ci) in g.iter_mut().zip(c) {
            *gi += ci;
        }
    };
    refresh(&y, &mut g);
    let mut value = 0.5 * y.iter().zip(&g).zip(c).map(|((yi, gi), ci)| yi * (gi + ci)).sum::<f64>();
    let mut alpha = 1.0 / projected_gradient_norm(&y, &g).max(1e-12).max(1.0);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iters {
        if projected_gradient_norm(&y, &g) <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        for _ in 0..60 {
            for k in 0..d {
                step[k] = (y[k] - alpha * g[k]).clamp(0.0, 1.0) - y[k];
            }
            let slope = dot(&g, &step);
            if slope >= 0.0 {
                break;
            }
            q.hess_apply(&step, &mut hd);
            let change = slope + 0.5 * dot(&step, &hd);
            if change <= 1e-4 * slope {
                for k in 0..d {
                    y[k] += step[k];
                    g[k] += hd[k];
                }
                value += change;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        let curv = dot(&step, &hd);
        alpha = if curv > 0.0 { (dot(&step, &step) / curv).clamp(1e-14, 1e14) } else { 1e14 };
        if iterations % 50 == 0 {
            refresh(&y, &mut g);
            value = 0.5 * y.iter().zip(&g).zip(c).map(|((yi, gi), ci)| yi * (gi + ci)).sum::<f64>();
        }
    }
    BoxQpResult { y, value, iterations, converged }
}

/// `L(y) = yᵀΓy − λᵀ(Ay − 1) + σ/2 ‖Ay − 1‖²` up to a constant.
struct Lagrangian<'a> {
    gamma: &'a dyn GammaOperator,
    marg: MarginalOperator,
    sigma: f64,
    linear: Vec<f64>,
}

impl<'a> Lagrangian<'a> {
    fn new(gamma: &'a dyn GammaOperator, lambda: &[f64], sigma: f64) -> Self {
        let n = gamma.points();
        let marg = MarginalOperator { n };
        // c = −Aᵀλ − σAᵀ1
        let w: Vec<f64> = lambda.iter().map(|l| -l - sigma).collect();
        let mut linear = vec![0.0; n * n];
        marg.adjoint(&w, &mut linear);
        Self { gamma, marg, sigma, linear }
    }
}

impl BoxQuadratic for Lagrangian<'_> {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    // H = 2Γ + σAᵀA
    fn hess_apply(&self, d: &[f64], out: &mut [f64]) {
        self.gamma.apply(d, out);
        let n = self.marg.n;
        let mut ad = vec![0.0; 2 * n];
        self.marg.apply(d, &mut ad);
        for v in ad.iter_mut() {
            *v *= self.sigma;
        }
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                out[k] = 2.0 * out[k] + ad[i] + ad[n + j];
            }
        }
    }

    fn linear(&self) -> &[f64] {
        &self.linear
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterRecord {
    pub iteration: usize,
    pub sigma: f64,
    /// `yᵀΓ^(p)y` after the inner solve.
    pub objective: f64,
    pub violation: f64,
    pub sparsity: f64,
    pub inner_iterations: usize,
    pub inner_converged: bool,
}

/// Rounded map from a relaxed assignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractedMap {
    /// Row-wise argmax, lowest index on ties.
    pub map: Vec<usize>,
    pub bijective: bool,
    /// `map` itself when bijective, otherwise the maximum-weight permutation.
    pub repaired: Vec<usize>,
}

pub fn extract_map(y: &[f64], n: usize) -> ExtractedMap {
    assert_eq!(y.len(), n * n, "vector length must be n²");
    let rows: Vec<&[f64]> = y.chunks(n).collect();
    let map: Vec<usize> = rows.iter().map(|r| argmax(r)).collect();
    let mut seen = vec![false; n];
    let bijective = map.iter().all(|&j| !std::mem::replace(&mut seen[j], true));
    let repaired = if bijective {
        map.clone()
    } else {
        max_weight_assignment(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    };
    ExtractedMap { map, bijective, repaired }
}

#[derive(Debug, Clone, Serialize)]
pub struct GhMatchResult {
    pub y: Vec<f64>,
    /// The argmax map; may be non-bijective.
    pub raw_map: Vec<usize>,
    pub bijective: bool,
    /// Bijective matching (the argmax map, or its repair).
    pub matching: Matching,
    /// `½ max` distortion of `matching`, an upper bound on `d_GH`.
    pub upper_bound: f64,
    /// `½ (yᵀΓ^(p)y / n²)^{1/p}` at the final relaxed iterate.
    pub p_mean_value: f64,
    pub constraint_violation: f64,
    pub sparsity: f64,
    pub trajectory: Vec<OuterRecord>,
    /// Outer iterations whose inner solve hit the iteration cap.
    pub inner_stalls: usize,
}

/// Fraction of entries within `1e-3` of 0 or 1.
pub fn sparsity(y: &[f64]) -> f64 {
    let near = y.iter().filter(|&&v| v.abs() <= 1e-3 || (v - 1.0).abs() <= 1e-3).count();
    near as f64 / y.len().max(1) as f64
}

pub fn gh_match(x: &FiniteMetricSpace, y: &FiniteMetricSpace, cfg: &GhMatchConfig) -> Result<GhMatchResult, GhMatchError> {
    cfg.validate()?;
    let n = x.len();
    if y.len() != n {
        return Err(GhMatchError::CardinalityMismatch(n, y.len()));
    }
    let dense;
    let lazy;
    let gamma: &dyn GammaOperator = if n <= cfg.dense_limit {
        dense = DistortionTensor::build(x, y, cfg.p);
        &dense
    } else {
        lazy = LazyGamma::new(x, y, cfg.p);
        &lazy
    };
    let marg = MarginalOperator { n };
    let mut lambda = vec![cfg.lambda0; 2 * n];
    let mut yv = vec![1.0 / n as f64; n * n];
    let mut trajectory = Vec::new();
    let mut inner_stalls = 0;
    let mut ay = vec![0.0; 2 * n];
    let mut gy = vec![0.0; n * n];

    for k in 0..cfg.outer_iters {
        let sigma = cfg.sigma0 * cfg.mu.powi(k as i32);
        let lag = Lagrangian::new(gamma, &lambda, sigma);
        let mut g0 = vec![0.0; n * n];
        lag.hess_apply(&yv, &mut g0);
        let scale = 1.0 + g0.iter().zip(lag.linear()).fold(0.0_f64, |m, (a, b)| m.max((a + b).abs()));
        let inner = box_qp_minimize(&lag, &yv, cfg.inner_tol * scale, cfg.inner_max_iters);
        if !inner.converged {
            inner_stalls += 1;
        }
        yv = inner.y;
        if let Some(t) = cfg.threshold {
            for v in yv.iter_mut() {
                if *v <= t {
                    *v = 0.0;
                } else if *v >= 1.0 - t {
                    *v = 1.0;
                }
            }
        }
        marg.apply(&yv, &mut ay);
        for (l, a) in lambda.iter_mut().zip(&ay) {
            *l -= sigma * (a - 1.0);
        }
        let violation = ay.iter().fold(0.0_f64, |m, v| m.max((v - 1.0).abs()));
        gamma.apply(&yv, &mut gy);
        trajectory.push(OuterRecord {
            iteration: k,
            sigma,
            objective: dot(&yv, &gy),
            violation,
            sparsity: sparsity(&yv),
            inner_iterations: inner.iterations,
            inner_converged: inner.converged,
        });
        if violation <= cfg.violation_tol {
            break;
        }
    }

    let extracted = extract_map(&yv, n);
    let matching = Matching::from_map(x, y, &extracted.repaired);
    gamma.apply(&yv, &mut gy);
    let quad = dot(&yv, &gy).max(0.0);
    Ok(GhMatchResult {
        upper_bound: matching.distortion,
        p_mean_value: 0.5 * (quad / (n * n) as f64).powf(1.0 / cfg.p),
        constraint_violation: marg.violation(&yv),
        sparsity: sparsity(&yv),
        raw_map: extracted.map,
        bijective: extracted.bijective,
        matching,
        y: yv,
        trajectory,
        inner_stalls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Diagonal {
        h: Vec<f64>,
        c: Vec<f64>,
    }

    impl BoxQuadratic for Diagonal {
        fn dim(&self) -> usize {
            self.h.len()
        }
        fn hess_apply(&self, d: &[f64], out: &mut [f64]) {
            for k in 0..d.len() {
                out[k] = self.h[k] * d[k];
            }
        }
        fn linear(&self) -> &[f64] {
            &self.c
        }
    }

    #[test]
    fn separable_interior_minimum() {
        // minimizer −c/h = (0.25, 0.5, 0.8)
        let q = Diagonal { h: vec![4.0, 1.0, 10.0], c: vec![-1.0, -0.5, -8.0] };
        let r = box_qp_minimize(&q, &[0.0, 1.0, 0.5], 1e-12, 500);
        assert!(r.converged);
        for (a, b) in r.y.iter().zip([0.25, 0.5, 0.8]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn clipped_minimum_sits_on_the_box() {
        // unconstrained minimizer (−1, 3, 0.5)
        let q = Diagonal { h: vec![1.0, 1.0, 2.0], c: vec![1.0, -3.0, -1.0] };
        let r = box_qp_minimize(&q, &[0.5, 0.5, 0.5], 1e-12, 500);
        assert_eq!(&r.y[..2], &[0.0, 1.0]);
        assert!((r.y[2] - 0.5).abs() < 1e-10);
        let g: Vec<f64> = (0..3).map(|k| q.h[k] * r.y[k] + q.c[k]).collect();
        assert!(projected_gradient_norm(&r.y, &g) <= 1e-12);
        assert!(g[0] > 0.0 && g[1] < 0.0);
    }

    #[test]
    fn never_worse_than_the_start() {
        let q = Diagonal { h: vec![1.0, 0.0, 3.0, 2.0], c: vec![-0.3, 0.2, -4.0, 0.1] };
        let start = [0.3, 0.6, 0.9, 0.1];
        let f = |y: &[f64]| (0..4).map(|k| 0.5 * q.h[k] * y[k] * y[k] + q.c[k] * y[k]).sum::<f64>();
        let r = box_qp_minimize(&q, &start, 1e-9, 3);
        assert!(f(&r.y) <= f(&start));
        assert!((f(&r.y) - r.value).abs() < 1e-12);
    }

    #[test]
    fn marginal_operator() {
        let op = MarginalOperator { n: 2 };
        let mut out = vec![0.0; 4];
        op.apply(&[1.0, 2.0, 3.0, 4.0], &mut out);
        assert_eq!(out, vec![3.0, 7.0, 4.0, 6.0]);
        let w = [1.0, 2.0, 10.0, 20.0];
        let mut back = vec![0.0; 4];
        op.adjoint(&w, &mut back);
        assert_eq!(back, vec![11.0, 21.0, 12.0, 22.0]);
        // ⟨Ay, w⟩ = ⟨y, Aᵀw⟩
        assert_eq!(dot(&out, &w), dot(&[1.0, 2.0, 3.0, 4.0], &back));
    }

    #[test]
    fn map_extraction() {
        let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let e = extract_map(&id, 3);
        assert_eq!((e.map.clone(), e.bijective), (vec![0, 1, 2], true));
        let uniform = [1.0 / 3.0; 9];
        let e = extract_map(&uniform, 3);
        assert_eq!(e.map, vec![0, 0, 0]);
        assert!(!e.bijective);
        assert_eq!(e.repaired, vec![0, 1, 2]);
    }

    #[test]
    fn planted_isometry_small() {
        let x = FiniteMetricSpace::from_point_cloud(&[
            vec![0.0, 0.0],
            vec![1.0, 0.1],
            vec![0.3, 1.7],
            vec![2.2, 0.9],
            vec![1.4, 2.6],
        ])
        .unwrap();
        let perm = [3, 0, 4, 1, 2];
        // point k of y is point order[k] of x, so x_i ↦ y_{perm[i]} with order = perm⁻¹
        let mut order = vec![0; 5];
        for (i, &j) in perm.iter().enumerate() {
            order[j] = i;
        }
        let y = x.reindexed(&order).unwrap();
        let r = gh_match(&x, &y, &GhMatchConfig::default()).unwrap();
        assert_eq!(r.matching.map().unwrap(), perm.to_vec());
        assert_eq!(r.upper_bound, 0.0);
        assert!(r.bijective);
        assert!(r.constraint_violation <= 1e-6);
        for (k, rec) in r.trajectory.iter().enumerate() {
            assert_eq!(rec.sigma, 5.0 * 10f64.powi(k as i32));
        }
    }
}
