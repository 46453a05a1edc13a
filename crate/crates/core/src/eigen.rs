//! Dense symmetric eigendecomposition and projection onto the PSD cone.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("matrix is {0}x{1}, expected square")]
    NotSquare(usize, usize),
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("eigensolver did not converge within {0} iterations")]
    NumericalBreakdown(usize),
}

/// Eigenvalues in ascending order; column `k` of `vectors` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

fn check(m: &DMatrix<f64>) -> Result<(), EigenError> {
    if m.nrows() != m.ncols() {
        return Err(EigenError::NotSquare(m.nrows(), m.ncols()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    Ok(())
}

fn iteration_cap(n: usize) -> usize {
    100 * n.max(10)
}

/// Householder tridiagonalization followed by implicit-shift QR sweeps.
/// Only the lower triangle is read.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<Eigen, EigenError> {
    check(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Eigen { values: Vec::new(), vectors: DMatrix::zeros(0, 0) });
    }
    let cap = iteration_cap(n);
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, cap).ok_or(EigenError::NumericalBreakdown(cap))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Nearest PSD matrix in Frobenius norm, together with the eigenvalues of
/// the input.
pub fn project_psd_with_spectrum(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>), EigenError> {
    let eig = symmetric_eigen(m)?;
    let n = m.nrows();
    let positive = eig.values.iter().filter(|&&v| v > 0.0).count();
    // Rebuild from whichever eigen-subspace is smaller.
    let out = if positive <= n - positive {
        partial_outer(&eig, n - positive..n, m.nrows())
    } else {
        let neg = partial_outer(&eig, 0..n - positive, m.nrows());
        let mut sym = m.clone();
        sym.fill_upper_triangle_with_lower_triangle();
        sym - neg
    };
    Ok((symmetrized(out), eig.values))
}

pub fn project_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, EigenError> {
    project_psd_with_spectrum(m).map(|(p, _)| p)
}

fn partial_outer(eig: &Eigen, range: std::ops::Range<usize>, n: usize) -> DMatrix<f64> {
    let k = range.len();
    if k == 0 {
        return DMatrix::zeros(n, n);
    }
    let q = eig.vectors.columns(range.start, k);
    let mut scaled = q.clone_owned();
    for (c, mut col) in scaled.column_iter_mut().enumerate() {
        col *= eig.values[range.start + c];
    }
    scaled * q.transpose()
}

fn symmetrized(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64, EigenError> {
    Ok(symmetric_eigen(m)?.values.first().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn diagonal_input() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let e = symmetric_eigen(&m).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        for (k, axis) in [1usize, 2, 0].iter().enumerate() {
            assert!((e.vectors[(*axis, k)].abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_by_two() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = symmetric_eigen(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn reconstruction_at_dim_50() {
        let m = random_symmetric(50, 3);
        let e = symmetric_eigen(&m).unwrap();
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        let r = &e.vectors * lam * e.vectors.transpose() - &m;
        assert!(r.norm() <= 1e-10 * m.norm());
        let orth = e.vectors.transpose() * &e.vectors - DMatrix::identity(50, 50);
        assert!(orth.norm() < 1e-12);
    }

    #[test]
    fn psd_projection_examples() {
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        let p = project_psd(&d).unwrap();
        assert!((p - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).norm() < 1e-15);

        let s = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let p = project_psd(&s).unwrap();
        assert!((p - DMatrix::from_element(2, 2, 0.5)).norm() < 1e-15);

        let a = random_symmetric(12, 9);
        let psd = &a * &a;
        assert!((project_psd(&psd).unwrap() - &psd).norm() < 1e-12 * psd.norm());
    }

    #[test]
    fn both_subspace_branches_agree() {
        // mostly negative spectrum, so the positive part is rebuilt directly
        let mut m = random_symmetric(9, 1);
        m -= DMatrix::identity(9, 9) * 0.8;
        let p = project_psd(&m).unwrap();
        let e = symmetric_eigen(&m).unwrap();
        let clipped: Vec<f64> = e.values.iter().map(|v| v.max(0.0)).collect();
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(clipped));
        let direct = &e.vectors * lam * e.vectors.transpose();
        assert!((p - direct).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(symmetric_eigen(&DMatrix::zeros(2, 3)).unwrap_err(), EigenError::NotSquare(2, 3));
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert_eq!(symmetric_eigen(&m).unwrap_err(), EigenError::NonFinite);
    }
}
