//! Exact sampling through a factor of the full block covariance matrix.

use super::{require_lag, FieldSample};
use crate::error::{Error, Result};
use crate::linalg::RMatrix;
use crate::lrd_model::{CovarianceTable, LatticeDims};
use crate::rng::{fill_standard_normal, stream, StreamTag};
use nalgebra::{Cholesky, SymmetricEigen};

const MAX_BLOCK: usize = 8192;
const SEMIDEFINITE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DirectSampler {
    dims: LatticeDims,
    n: usize,
    factor: RMatrix,
}

impl DirectSampler {
    pub fn new(cov: &CovarianceTable, n: usize) -> Result<Self> {
        let dims = cov.dims;
        require_lag(cov, n.saturating_sub(1))?;
        let sigma = block_covariance(cov, n)?;
        let factor = match Cholesky::new(sigma.clone()) {
            Some(ch) => ch.l(),
            None => {
                // Singular but PSD windows (e.g. perfectly coupled coordinates).
                let eig = SymmetricEigen::new(sigma);
                let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v));
                if min < -SEMIDEFINITE_TOLERANCE * max.max(1.0) {
                    return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
                }
                let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
                &eig.eigenvectors * RMatrix::from_diagonal(&roots)
            }
        };
        Ok(Self { dims, n, factor })
    }

    /// The linear map `A` with `A Aᵀ` equal to the block covariance.
    pub fn factor(&self) -> &RMatrix {
        &self.factor
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> FieldSample {
        let mut rng = stream(seed, StreamTag::DirectFactorization, replicate);
        let size = self.factor.nrows();
        let mut xi = vec![0.0; size];
        fill_standard_normal(&mut rng, &mut xi);
        let x = &self.factor * nalgebra::DVector::from_vec(xi);
        let points = size / self.dims.d;
        let values = (0..self.dims.d).map(|j| x.as_slice()[j * points..(j + 1) * points].to_vec()).collect();
        FieldSample { dims: self.dims, n: self.n, seed, replicate, values }
    }
}

/// `Σ[(j, p), (j', q)] = r_{j,j'}(q − p)`, coordinate-major.
pub fn block_covariance(cov: &CovarianceTable, n: usize) -> Result<RMatrix> {
    let LatticeDims { nu, d } = cov.dims;
    let points = n.pow(nu as u32);
    if d * points > MAX_BLOCK {
        return Err(Error::Dimensionality { dim: d * points, limit: MAX_BLOCK });
    }
    require_lag(cov, n.saturating_sub(1))?;
    let coords: Vec<Vec<i64>> = (0..points)
        .map(|mut f| {
            let mut p = vec![0i64; nu];
            for slot in p.iter_mut().rev() {
                *slot = (f % n) as i64;
                f /= n;
            }
            p
        })
        .collect();
    let mut lag = vec![0i64; nu];
    let mut m = RMatrix::zeros(d * points, d * points);
    for j in 0..d {
        for jp in 0..d {
            for (a, p) in coords.iter().enumerate() {
                for (b, q) in coords.iter().enumerate() {
                    for l in 0..nu {
                        lag[l] = q[l] - p[l];
                    }
                    m[(j * points + a, jp * points + b)] = cov.at(j, jp, &lag);
                }
            }
        }
    }
    Ok(m)
}
