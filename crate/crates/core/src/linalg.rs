//! Small dense Hermitian helpers on top of nalgebra.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = hermitize(m);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    hermitian_eigen(m).0[0]
}

/// Hermitian PSD square root; eigenvalues in `[-tol, 0)` are clipped to zero.
pub fn hermitian_sqrt(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (vals, vecs) = hermitian_eigen(m);
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    if let Some(&lo) = vals.first() {
        if lo < -tol * scale.max(1.0) {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: lo });
        }
    }
    let n = m.nrows();
    let roots: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    Ok(CMatrix::from_fn(n, n, |r, c| {
        (0..n)
            .map(|k| vecs[(r, k)] * roots[k] * vecs[(c, k)].conj())
            .sum()
    }))
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol))
}

pub fn real_to_complex(m: &RMatrix) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}
