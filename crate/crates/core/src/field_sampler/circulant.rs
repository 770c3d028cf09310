//! Multivariate circulant embedding.

use super::{require_lag, FieldSample};
use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::lrd_model::{CovarianceTable, LatticeDims};
use crate::rng::{standard_normal, stream, StreamTag};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingReport {
    pub size: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Number of per-frequency eigenvalues raised to zero.
    pub clipped: usize,
    /// Sum of the magnitudes of the clipped eigenvalues.
    pub clipped_mass: f64,
}

#[derive(Debug, Clone)]
pub struct CirculantSampler {
    dims: LatticeDims,
    n: usize,
    side: usize,
    factors: Vec<CMatrix>,
    report: EmbeddingReport,
}

fn wrap(m: usize, side: usize) -> Vec<i64> {
    let half = side / 2;
    if side % 2 == 0 && m == half {
        vec![half as i64, -(half as i64)]
    } else if m < side.div_ceil(2) {
        vec![m as i64]
    } else {
        vec![m as i64 - side as i64]
    }
}

/// Mean of `r` over every sign choice of the lag coordinates that sit on
/// the embedding midpoint, so the embedded sequence stays symmetric.
fn embedded_value(cov: &CovarianceTable, j: usize, jp: usize, idx: &[usize], side: usize) -> f64 {
    let choices: Vec<Vec<i64>> = idx.iter().map(|&m| wrap(m, side)).collect();
    let total: usize = choices.iter().map(|c| c.len()).product();
    let mut lag = vec![0i64; idx.len()];
    let mut acc = 0.0;
    for mut f in 0..total {
        for (slot, c) in lag.iter_mut().zip(&choices) {
            *slot = c[f % c.len()];
            f /= c.len();
        }
        acc += cov.at(j, jp, &lag);
    }
    acc / total as f64
}

impl CirculantSampler {
    pub fn new(cov: &CovarianceTable, n: usize, factor: usize, clip_tolerance: f64) -> Result<Self> {
        let dims = cov.dims;
        let LatticeDims { nu, d } = dims;
        let side = factor * n;
        require_lag(cov, side / 2)?;
        let shape = vec![side; nu];
        let total = side.pow(nu as u32);
        let unflatten = |mut f: usize| {
            let mut idx = vec![0usize; nu];
            for slot in idx.iter_mut().rev() {
                *slot = f % side;
                f /= side;
            }
            idx
        };
        let spectra: Vec<Vec<Complex64>> = (0..d * d)
            .into_par_iter()
            .map(|e| {
                let (j, jp) = (e / d, e % d);
                let mut buf: Vec<Complex64> = (0..total)
                    .map(|f| Complex64::new(embedded_value(cov, j, jp, &unflatten(f), side), 0.0))
                    .collect();
                fft_nd(&mut buf, &shape, true);
                buf
            })
            .collect();
        let eig: Vec<(Vec<f64>, CMatrix)> = (0..total)
            .into_par_iter()
            .map(|w| hermitian_eigen(&CMatrix::from_fn(d, d, |j, jp| spectra[j * d + jp][w])))
            .collect();
        let max = eig.iter().flat_map(|(v, _)| v.iter()).fold(0.0f64, |a, &v| a.max(v));
        let min = eig.iter().flat_map(|(v, _)| v.iter()).fold(f64::INFINITY, |a, &v| a.min(v));
        if min < -clip_tolerance * max {
            return Err(Error::EmbeddingFailure { min_eigenvalue: min, max_eigenvalue: max, tolerance: clip_tolerance });
        }
        let mut clipped = 0;
        let mut clipped_mass = 0.0;
        let factors = eig
            .into_iter()
            .map(|(vals, vecs)| {
                let roots: Vec<f64> = vals
                    .iter()
                    .map(|&v| {
                        if v < 0.0 {
                            clipped += 1;
                            clipped_mass += -v;
                        }
                        v.max(0.0).sqrt()
                    })
                    .collect();
                CMatrix::from_fn(d, d, |r, c| vecs[(r, c)] * roots[c])
            })
            .collect();
        let report = EmbeddingReport { size: side, min_eigenvalue: min, max_eigenvalue: max, clipped, clipped_mass };
        Ok(Self { dims, n, side, factors, report })
    }

    pub fn report(&self) -> &EmbeddingReport {
        &self.report
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> FieldSample {
        let LatticeDims { nu, d } = self.dims;
        let mut rng = stream(seed, StreamTag::CirculantEmbedding, replicate);
        let total = self.factors.len();
        let mut fields = vec![vec![Complex64::new(0.0, 0.0); total]; d];
        let mut xi = vec![Complex64::new(0.0, 0.0); d];
        for (w, q) in self.factors.iter().enumerate() {
            for x in xi.iter_mut() {
                let re = standard_normal(&mut rng);
                let im = standard_normal(&mut rng);
                *x = Complex64::new(re, im) * FRAC_1_SQRT_2;
            }
            for j in 0..d {
                fields[j][w] = (0..d).map(|i| q[(j, i)] * xi[i]).sum();
            }
        }
        let shape = vec![self.side; nu];
        let scale = SQRT_2 / (total as f64).sqrt();
        let points = self.n.pow(nu as u32);
        let values = fields
            .into_iter()
            .map(|mut buf| {
                fft_nd(&mut buf, &shape, true);
                (0..points)
                    .map(|mut f| {
                        let mut pos = 0;
                        let mut stride = 1;
                        for _ in 0..nu {
                            pos += (f % self.n) * stride;
                            f /= self.n;
                            stride *= self.side;
                        }
                        buf[pos].re * scale
                    })
                    .collect()
            })
            .collect();
        FieldSample { dims: self.dims, n: self.n, seed, replicate, values }
    }

    /// Covariances implied by the (clipped) factors for lags up to `max_lag`.
    pub fn induced_covariance(&self, max_lag: usize) -> Result<CovarianceTable> {
        let LatticeDims { nu, d } = self.dims;
        if 2 * max_lag >= self.side {
            return Err(Error::TableRange { lag: vec![max_lag as i64], max_lag: self.side / 2 });
        }
        let shape = vec![self.side; nu];
        let total = self.factors.len();
        let mut entries = Vec::with_capacity(d * d);
        for j in 0..d {
            for jp in 0..d {
                let mut buf: Vec<Complex64> = self
                    .factors
                    .iter()
                    .map(|q| (0..d).map(|i| q[(j, i)] * q[(jp, i)].conj()).sum())
                    .collect();
                fft_nd(&mut buf, &shape, false);
                entries.push(buf);
            }
        }
        let side = self.side as i64;
        Ok(CovarianceTable::from_fn(self.dims, max_lag, |lag, j, jp| {
            let pos = lag.iter().fold(0usize, |acc, &l| acc * self.side + l.rem_euclid(side) as usize);
            entries[j * d + jp][pos].re / total as f64
        }))
    }
}
