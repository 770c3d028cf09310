//! Second-moment bound for the higher-order remainder of a functional.

use super::TailExpansion;
use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, stream, StreamTag};
use crate::scalar::Scalar;
use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct TailMomentReport<S> {
    /// `|E H(X) H(Y)|`, exact or estimated.
    pub lhs: S,
    /// `ψ^{k+1} E H(X)²`.
    pub bound: S,
    pub psi: S,
    pub holds: bool,
    /// Monte-Carlo standard error of `lhs`; zero when exact.
    pub std_error: f64,
}

/// Larger of the maximal absolute row sum and column sum of `r`.
pub fn psi_bound<S: Scalar>(r: &[Vec<S>]) -> S {
    let d = r.len();
    let mut best = S::zero();
    for j in 0..d {
        let row = r[j].iter().fold(S::zero(), |a, v| a + v.abs());
        let col = (0..d).fold(S::zero(), |a, i| a + r[i][j].abs());
        for v in [row, col] {
            if v > best {
                best = v;
            }
        }
    }
    best
}

fn check_square<S>(r: &[Vec<S>], d: usize) -> Result<()> {
    if r.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: r.len() });
    }
    if let Some(row) = r.iter().find(|row| row.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: row.len() });
    }
    Ok(())
}

/// Exact comparison for a diagonal cross-correlation matrix `r`.
pub fn tail_moment_check<S: Scalar>(h1: &TailExpansion<S>, r: &[Vec<S>]) -> Result<TailMomentReport<S>> {
    let d = h1.d();
    check_square(r, d)?;
    let psi = psi_bound(r);
    if psi > S::one() {
        return Err(Error::Assumption(psi.to_f64_lossy()));
    }
    for (i, row) in r.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i != j && !v.is_zero() {
                return Err(Error::NonDiagonalModel(format!("r[{i}][{j}] is nonzero")));
            }
        }
    }
    let diag: Vec<S> = (0..d).map(|j| r[j][j].clone()).collect();
    let lhs = h1.as_product().cross_moment_diagonal(&diag)?.abs();
    let bound = psi.powu(h1.k() + 1) * h1.second_moment();
    Ok(TailMomentReport { holds: lhs <= bound, lhs, bound, psi, std_error: 0.0 })
}

/// Monte-Carlo comparison for a general `r` with `ψ ≤ 1`. `Y = rᵀX + BZ`
/// with `BBᵀ = I − rᵀr`, so that `E X Yᵀ = r`.
pub fn tail_moment_monte_carlo(
    h1: &TailExpansion<f64>,
    r: &[Vec<f64>],
    replicates: usize,
    seed: u64,
) -> Result<TailMomentReport<f64>> {
    let d = h1.d();
    check_square(r, d)?;
    if replicates < 2 {
        return Err(Error::InsufficientReplicates { needed: 2, got: replicates });
    }
    let psi = psi_bound(r);
    if psi > 1.0 {
        return Err(Error::Assumption(psi));
    }
    let rm = DMatrix::from_fn(d, d, |i, j| r[i][j]);
    let resid = DMatrix::identity(d, d) - rm.transpose() * &rm;
    let eig = resid.symmetric_eigen();
    let b = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()))
        * eig.eigenvectors.transpose();
    let rt = rm.transpose();

    let mut rng = stream(seed, StreamTag::Auxiliary(2), 0);
    let mut buf = vec![0.0; 2 * d];
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..replicates {
        fill_standard_normal(&mut rng, &mut buf);
        let x = nalgebra::DVector::from_column_slice(&buf[..d]);
        let z = nalgebra::DVector::from_column_slice(&buf[d..]);
        let y = &rt * &x + &b * z;
        let v = h1.eval(x.as_slice())? * h1.eval(y.as_slice())?;
        sum += v;
        sum2 += v * v;
    }
    let n = replicates as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    let se = (var / n).sqrt();
    let bound = psi.powi(h1.k() as i32 + 1) * h1.second_moment();
    Ok(TailMomentReport {
        lhs: mean.abs(),
        bound,
        psi,
        holds: mean.abs() <= bound + 3.0 * se,
        std_error: se,
    })
}
