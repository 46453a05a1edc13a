//! The distortion tensor `Γ_{ij,i'j'} = |d_X(x_i, x_{i'}) − d_Y(y_j, y_{j'})|`,
//! flattened to an `nm × nm` matrix with row index `i·m + j`.

use thiserror::Error;

use crate::metric::FiniteMetricSpace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistortionError {
    #[error("support set is empty")]
    EmptySupport,
    #[error("support index ({0}, {1}) out of range")]
    BadIndex(usize, usize),
}

/// Entrywise power applied to `Γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Power {
    /// Plain `Γ`; used by the max-type (`p = ∞`) objectives.
    Unpowered,
    Finite(f64),
}

impl Power {
    pub fn from_p(p: f64) -> Self {
        if p.is_infinite() {
            Power::Unpowered
        } else {
            Power::Finite(p)
        }
    }

    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Power::Unpowered => v,
            Power::Finite(1.0) => v,
            Power::Finite(2.0) => v * v,
            Power::Finite(p) => v.powf(p),
        }
    }

    #[inline]
    fn invert(self, v: f64) -> f64 {
        match self {
            Power::Unpowered => v,
            Power::Finite(1.0) => v,
            Power::Finite(p) => v.powf(1.0 / p),
        }
    }
}

/// Dense `Γ^(p)` for a pair of spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionTensor {
    n: usize,
    m: usize,
    power: Power,
    gamma: Vec<f64>,
}

impl DistortionTensor {
    /// `p = f64::INFINITY` stores the unpowered tensor. Each unordered pair of
    /// flattened indices is computed once, so the matrix is exactly symmetric.
    pub fn build(x: &FiniteMetricSpace, y: &FiniteMetricSpace, p: f64) -> Self {
        assert!(p >= 1.0, "power must be at least 1, got {p}");
        let power = Power::from_p(p);
        let (n, m) = (x.len(), y.len());
        let nm = n * m;
        let mut gamma = vec![0.0; nm * nm];
        for a in 0..nm {
            let (i, j) = (a / m, a % m);
            for b in a..nm {
                let (i2, j2) = (b / m, b % m);
                let v = power.apply((x.dist(i, i2) - y.dist(j, j2)).abs());
                gamma[a * nm + b] = v;
                gamma[b * nm + a] = v;
            }
        }
        Self { n, m, power, gamma }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Side length `nm` of the flattened matrix.
    pub fn dim(&self) -> usize {
        self.n * self.m
    }

    pub fn power(&self) -> Power {
        self.power
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.m + j
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.gamma[a * self.dim() + b]
    }

    /// `Γ^(p)_{ij,i'j'}`.
    #[inline]
    pub fn entry(&self, i: usize, j: usize, i2: usize, j2: usize) -> f64 {
        self.get(self.index(i, j), self.index(i2, j2))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gamma
    }

    pub fn max_entry(&self) -> f64 {
        self.gamma.iter().fold(0.0_f64, |m, &v| m.max(v))
    }

    /// Maximum unpowered `Γ` over a set of flattened index pairs.
    pub fn max_support_value(&self, support: &[(usize, usize)]) -> Result<f64, DistortionError> {
        if support.is_empty() {
            return Err(DistortionError::EmptySupport);
        }
        let dim = self.dim();
        let mut best = 0.0_f64;
        for &(a, b) in support {
            if a >= dim || b >= dim {
                return Err(DistortionError::BadIndex(a, b));
            }
            best = best.max(self.get(a, b));
        }
        Ok(self.power.invert(best))
    }

    /// `out = Γ^(p) · v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let dim = self.dim();
        for (a, o) in out.iter_mut().enumerate() {
            let row = &self.gamma[a * dim..(a + 1) * dim];
            *o = row.iter().zip(v).map(|(g, x)| g * x).sum();
        }
    }
}

/// Matrix-vector products with `Γ^(p)` for square problems.
pub trait GammaOperator: Sync {
    /// Number of points `n`; vectors have length `n²`.
    fn points(&self) -> usize;
    fn apply(&self, v: &[f64], out: &mut [f64]);
}

impl GammaOperator for DistortionTensor {
    fn points(&self) -> usize {
        self.n
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        DistortionTensor::apply(self, v, out)
    }
}

/// Generates `Γ^(p)` entries on the fly from the two distance matrices,
/// trading `O(n⁴)` memory for recomputation.
#[derive(Debug, Clone)]
pub struct LazyGamma<'a> {
    x: &'a FiniteMetricSpace,
    y: &'a FiniteMetricSpace,
    power: Power,
}

impl<'a> LazyGamma<'a> {
    pub fn new(x: &'a FiniteMetricSpace, y: &'a FiniteMetricSpace, p: f64) -> Self {
        assert_eq!(x.len(), y.len(), "lazy Γ products are only used for square problems");
        Self { x, y, power: Power::from_p(p) }
    }
}

impl GammaOperator for LazyGamma<'_> {
    fn points(&self) -> usize {
        self.x.len()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.x.len();
        let power = self.power;
        for i in 0..n {
            let xi = self.x.row(i);
            for j in 0..n {
                let yj = self.y.row(j);
                let mut acc = 0.0;
                for (i2, &dx) in xi.iter().enumerate() {
                    let block = &v[i2 * n..(i2 + 1) * n];
                    for (&dy, &w) in yj.iter().zip(block) {
                        acc += power.apply((dx - dy).abs()) * w;
                    }
                }
                out[i * n + j] = acc;
            }
        }
    }
}
