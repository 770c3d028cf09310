//! Approximate synthesis from per-cell spectral masses on a torus grid.
//!
//! The cell masses come from the truncated Fourier series of the table,
//! integrated exactly over each cell and clipped to PSD. Both the lag
//! truncation and the midpoint placement of the increments bias the result;
//! the bias shrinks as the grid is refined.

use super::{require_lag, FieldSample};
use crate::error::Result;
use crate::fft::fft_nd;
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::lrd_model::{CovarianceTable, LatticeDims};
use crate::rng::{standard_normal, stream, StreamTag};
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

#[derive(Debug, Clone)]
pub struct SpectralGridSampler {
    dims: LatticeDims,
    n: usize,
    cells: usize,
    reps: Vec<(usize, usize)>,
    factors: Vec<CMatrix>,
}

fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

fn unflatten(mut f: usize, side: usize, nu: usize) -> Vec<usize> {
    let mut idx = vec![0; nu];
    for slot in idx.iter_mut().rev() {
        *slot = f % side;
        f /= side;
    }
    idx
}

fn flatten(idx: &[usize], side: usize) -> usize {
    idx.iter().fold(0, |a, &i| a * side + i)
}

impl SpectralGridSampler {
    /// `factor · N` cells per axis on `[-π, π)^ν`.
    pub fn new(cov: &CovarianceTable, n: usize, factor: usize) -> Result<Self> {
        let LatticeDims { nu, d } = cov.dims;
        require_lag(cov, n.saturating_sub(1))?;
        let cells = (factor * n).max(2).next_multiple_of(2);
        let w = 2.0 * PI / cells as f64;
        let reach = cov.max_lag.min(cells / 2 - 1) as i64;
        let shape = vec![cells; nu];
        let total = cells.pow(nu as u32);
        let side = (2 * reach + 1) as usize;
        let norm = (2.0 * PI).powi(-(nu as i32));
        let mut masses = vec![CMatrix::zeros(d, d); total];
        for j in 0..d {
            for jp in 0..d {
                let mut buf = vec![Complex64::new(0.0, 0.0); total];
                for f in 0..side.pow(nu as u32) {
                    let lag: Vec<i64> = unflatten(f, side, nu).iter().map(|&i| i as i64 - reach).collect();
                    let mut a = Complex64::new(cov.at(j, jp, &lag) * norm, 0.0);
                    for &p in &lag {
                        let pf = p as f64;
                        a *= w * sinc(pf * w / 2.0);
                        a *= Complex64::from_polar(1.0, pf * PI - pf * w / 2.0);
                    }
                    let pos: Vec<usize> = lag.iter().map(|&p| p.rem_euclid(cells as i64) as usize).collect();
                    buf[flatten(&pos, cells)] += a;
                }
                fft_nd(&mut buf, &shape, false);
                for (m, v) in masses.iter_mut().zip(&buf) {
                    m[(j, jp)] = *v;
                }
            }
        }
        let mut reps = Vec::new();
        let mut factors = Vec::new();
        for f in 0..total {
            let mirror = flatten(&unflatten(f, cells, nu).iter().map(|&i| cells - 1 - i).collect::<Vec<_>>(), cells);
            if f < mirror {
                let (vals, vecs) = hermitian_eigen(&masses[f]);
                let q = CMatrix::from_fn(d, d, |r, c| vecs[(r, c)] * vals[c].max(0.0).sqrt());
                reps.push((f, mirror));
                factors.push(q);
            }
        }
        Ok(Self { dims: cov.dims, n, cells, reps, factors })
    }

    /// `Σ_Δ e^{i(p, c_Δ)} Q Q*(Δ)` for lags up to `max_lag`: the covariance
    /// this sampler actually produces.
    pub fn induced_covariance(&self, max_lag: usize) -> CovarianceTable {
        let LatticeDims { nu, d } = self.dims;
        let w = 2.0 * PI / self.cells as f64;
        let cells: Vec<(Vec<f64>, CMatrix)> = self
            .reps
            .iter()
            .zip(&self.factors)
            .map(|(&(cell, _), q)| {
                let c = unflatten(cell, self.cells, nu).iter().map(|&i| -PI + (i as f64 + 0.5) * w).collect();
                (c, q * q.adjoint())
            })
            .collect();
        CovarianceTable::from_fn(self.dims, max_lag, |lag, j, jp| {
            debug_assert!(j < d && jp < d);
            cells
                .iter()
                .map(|(c, g)| {
                    let phase: f64 = c.iter().zip(lag).map(|(x, &p)| x * p as f64).sum();
                    2.0 * (Complex64::from_polar(1.0, phase) * g[(j, jp)]).re
                })
                .sum()
        })
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> FieldSample {
        let LatticeDims { nu, d } = self.dims;
        let mut rng = stream(seed, StreamTag::SpectralGrid, replicate);
        let total = self.cells.pow(nu as u32);
        let mut z = vec![vec![Complex64::new(0.0, 0.0); total]; d];
        let mut xi = vec![Complex64::new(0.0, 0.0); d];
        for (&(cell, mirror), q) in self.reps.iter().zip(&self.factors) {
            for x in xi.iter_mut() {
                let re = standard_normal(&mut rng);
                let im = standard_normal(&mut rng);
                *x = Complex64::new(re, im) * FRAC_1_SQRT_2;
            }
            for j in 0..d {
                let v: Complex64 = (0..d).map(|i| q[(j, i)] * xi[i]).sum();
                z[j][cell] = v;
                z[j][mirror] = v.conj();
            }
        }
        // X(p) = Σ_Δ e^{-i(p, c_Δ)} Z(Δ) with c = -π + (i + ½)w.
        let w = 2.0 * PI / self.cells as f64;
        let shape = vec![self.cells; nu];
        let points = self.n.pow(nu as u32);
        let values = z
            .into_iter()
            .map(|mut buf| {
                fft_nd(&mut buf, &shape, false);
                (0..points)
                    .map(|f| {
                        let p = unflatten(f, self.n, nu);
                        let phase: f64 = p.iter().map(|&pl| pl as f64 * (PI - w / 2.0)).sum();
                        (buf[flatten(&p, self.cells)] * Complex64::from_polar(1.0, phase)).re
                    })
                    .collect()
            })
            .collect();
        FieldSample { dims: self.dims, n: self.n, seed, replicate, values }
    }
}
