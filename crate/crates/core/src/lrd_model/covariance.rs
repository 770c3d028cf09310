//! Covariance tables `r_{j,j'}(p)` over a box of lattice lags.

use super::density::{cell_rule, SpectralDensity};
use super::LatticeDims;
use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::numerics::{zeta, GaussLegendre};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;

/// Real `d × d` covariances for every lag in `[-max_lag, max_lag]^ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTable {
    pub dims: LatticeDims,
    pub max_lag: usize,
    data: Vec<f64>,
    /// Largest imaginary part dropped when the table was built from a density.
    pub imag_residue: f64,
}

impl CovarianceTable {
    pub fn zeros(dims: LatticeDims, max_lag: usize) -> Self {
        let n = (2 * max_lag + 1).pow(dims.nu as u32) * dims.d * dims.d;
        Self { dims, max_lag, data: vec![0.0; n], imag_residue: 0.0 }
    }

    /// Builds a table from `f(lag, j, j')`.
    pub fn from_fn(dims: LatticeDims, max_lag: usize, f: impl Fn(&[i64], usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dims, max_lag);
        let d = dims.d;
        let lags: Vec<Vec<i64>> = t.lags().collect();
        for (flat, lag) in lags.iter().enumerate() {
            for j in 0..d {
                for jp in 0..d {
                    t.data[(flat * d + j) * d + jp] = f(lag, j, jp);
                }
            }
        }
        t
    }

    pub fn lag_count(&self) -> usize {
        (2 * self.max_lag + 1).pow(self.dims.nu as u32)
    }

    /// All lags in row-major order of the box.
    pub fn lags(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        let side = 2 * self.max_lag + 1;
        let nu = self.dims.nu;
        let l = self.max_lag as i64;
        (0..self.lag_count()).map(move |mut flat| {
            let mut lag = vec![0i64; nu];
            for slot in lag.iter_mut().rev() {
                *slot = (flat % side) as i64 - l;
                flat /= side;
            }
            lag
        })
    }

    fn flat_index(&self, lag: &[i64]) -> Option<usize> {
        let side = 2 * self.max_lag + 1;
        let l = self.max_lag as i64;
        let mut flat = 0usize;
        for &p in lag {
            if p.abs() > l {
                return None;
            }
            flat = flat * side + (p + l) as usize;
        }
        Some(flat)
    }

    pub fn get(&self, j: usize, jp: usize, lag: &[i64]) -> Result<f64> {
        if lag.len() != self.dims.nu {
            return Err(Error::DimensionMismatch { expected: self.dims.nu, got: lag.len() });
        }
        let flat = self
            .flat_index(lag)
            .ok_or_else(|| Error::TableRange { lag: lag.to_vec(), max_lag: self.max_lag })?;
        let d = self.dims.d;
        Ok(self.data[(flat * d + j) * d + jp])
    }

    /// Panicking accessor for hot loops whose range was checked up front.
    pub fn at(&self, j: usize, jp: usize, lag: &[i64]) -> f64 {
        let flat = self.flat_index(lag).expect("lag inside table");
        let d = self.dims.d;
        self.data[(flat * d + j) * d + jp]
    }

    pub fn set(&mut self, j: usize, jp: usize, lag: &[i64], v: f64) -> Result<()> {
        let flat = self
            .flat_index(lag)
            .ok_or_else(|| Error::TableRange { lag: lag.to_vec(), max_lag: self.max_lag })?;
        let d = self.dims.d;
        self.data[(flat * d + j) * d + jp] = v;
        Ok(())
    }

    /// `ν = 1` series `r_{j,j'}(0..=max_lag)`.
    pub fn series(&self, j: usize, jp: usize) -> Vec<f64> {
        assert_eq!(self.dims.nu, 1);
        (0..=self.max_lag as i64).map(|p| self.at(j, jp, &[p])).collect()
    }

    /// True when every cross entry is within `tol` of zero.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        let d = self.dims.d;
        self.data
            .chunks(d * d)
            .all(|m| (0..d).all(|j| (0..d).all(|jp| j == jp || m[j * d + jp].abs() <= tol)))
    }

    /// Largest violation of `r_{j',j}(-p) = r_{j,j'}(p)`.
    pub fn symmetry_defect(&self) -> f64 {
        let d = self.dims.d;
        let mut worst: f64 = 0.0;
        for lag in self.lags() {
            let neg: Vec<i64> = lag.iter().map(|p| -p).collect();
            for j in 0..d {
                for jp in 0..d {
                    worst = worst.max((self.at(j, jp, &lag) - self.at(jp, j, &neg)).abs());
                }
            }
        }
        worst
    }

    /// Copy restricted to a smaller lag box.
    pub fn truncated(&self, max_lag: usize) -> Result<Self> {
        if max_lag > self.max_lag {
            return Err(Error::TableRange { lag: vec![max_lag as i64], max_lag: self.max_lag });
        }
        let mut t = Self::from_fn(self.dims, max_lag, |lag, j, jp| self.at(j, jp, lag));
        t.imag_residue = self.imag_residue;
        Ok(t)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let nu = self.dims.nu;
        let head: Vec<String> = (1..=nu).map(|l| format!("p{l}")).collect();
        writeln!(w, "{},j,jp,r", head.join(","))?;
        let d = self.dims.d;
        for lag in self.lags() {
            let ps: Vec<String> = lag.iter().map(|p| p.to_string()).collect();
            for j in 0..d {
                for jp in 0..d {
                    writeln!(w, "{},{},{},{:.17e}", ps.join(","), j, jp, self.at(j, jp, &lag))?;
                }
            }
        }
        Ok(())
    }
}

const REGULAR_NODES_1D: usize = 8;
const REGULAR_NODES_2D: usize = 6;
const DEFAULT_RESOLUTION_TOLERANCE: f64 = 1e-8;

/// `r(p) = ∫ e^{i(p,x)} g(x) dx` on `[-π, π)^ν` with a grid of `resolution`
/// cells per axis, cross-checked against a grid twice as fine.
pub fn covariance_table(
    density: &dyn SpectralDensity,
    max_lag: usize,
    resolution: usize,
) -> Result<CovarianceTable> {
    covariance_table_with_tolerance(density, max_lag, resolution, DEFAULT_RESOLUTION_TOLERANCE)
}

pub fn covariance_table_with_tolerance(
    density: &dyn SpectralDensity,
    max_lag: usize,
    resolution: usize,
    tolerance: f64,
) -> Result<CovarianceTable> {
    if max_lag < 1 {
        return Err(Error::InvalidParameter("max_lag must be at least 1".into()));
    }
    let coarse = fourier_on_grid(density, max_lag, resolution)?;
    let fine = fourier_on_grid(density, max_lag, 2 * resolution)?;
    let dims = density.dims();
    let d = dims.d;
    let zero_flat = {
        let side = 2 * max_lag + 1;
        (0..dims.nu).fold(0, |acc, _| acc * side + max_lag)
    };
    let mut change: f64 = 0.0;
    for e in 0..d * d {
        let (a, b) = (coarse[zero_flat * d * d + e], fine[zero_flat * d * d + e]);
        change = change.max((a - b).norm() / b.norm().max(1.0));
    }
    if change > tolerance {
        return Err(Error::Resolution { change, tolerance });
    }
    Ok(project_real(dims, max_lag, &fine))
}

fn project_real(dims: LatticeDims, max_lag: usize, raw: &[Complex64]) -> CovarianceTable {
    let d = dims.d;
    let mut t = CovarianceTable::zeros(dims, max_lag);
    let mut residue: f64 = 0.0;
    let lags: Vec<Vec<i64>> = t.lags().collect();
    for (flat, lag) in lags.iter().enumerate() {
        let neg: Vec<i64> = lag.iter().map(|p| -p).collect();
        let nflat = t.flat_index(&neg).unwrap();
        for j in 0..d {
            for jp in 0..d {
                let z = raw[(flat * d + j) * d + jp];
                let zt = raw[(nflat * d + jp) * d + j];
                residue = residue.max(z.im.abs());
                t.data[(flat * d + j) * d + jp] = 0.5 * (z.re + zt.re);
            }
        }
    }
    t.imag_residue = residue;
    t
}

/// Complex quadrature Fourier coefficients, layout `(lag, j, j')`.
fn fourier_on_grid(density: &dyn SpectralDensity, max_lag: usize, m: usize) -> Result<Vec<Complex64>> {
    let dims = density.dims();
    let (nu, d) = (dims.nu, dims.d);
    if nu > 2 {
        return Err(Error::Dimensionality { dim: nu, limit: 2 });
    }
    if m % 2 != 0 || m < 4 * max_lag {
        return Err(Error::InvalidParameter(format!(
            "grid resolution {m} must be even and at least 4·max_lag = {}",
            4 * max_lag
        )));
    }
    let q = if nu == 1 { REGULAR_NODES_1D } else { REGULAR_NODES_2D };
    let gl = GaussLegendre::new(q);
    let h = 2.0 * PI / m as f64;
    let beta = density.radial_exponent();
    let side = 2 * max_lag + 1;
    let n_lags = side.pow(nu as u32);
    let shape = vec![m; nu];
    let cells = m.pow(nu as u32);
    let lags: Vec<Vec<i64>> = (0..n_lags)
        .map(|mut flat| {
            let mut lag = vec![0i64; nu];
            for slot in lag.iter_mut().rev() {
                *slot = (flat % side) as i64 - max_lag as i64;
                flat /= side;
            }
            lag
        })
        .collect();
    let is_origin_cell = |idx: &[usize]| idx.iter().all(|&c| c == m / 2 - 1 || c == m / 2);
    let cell_index = |mut flat: usize| {
        let mut idx = vec![0usize; nu];
        for slot in idx.iter_mut().rev() {
            *slot = flat % m;
            flat /= m;
        }
        idx
    };

    let combos: Vec<Vec<usize>> = (0..q.pow(nu as u32))
        .map(|mut f| {
            let mut c = vec![0usize; nu];
            for slot in c.iter_mut().rev() {
                *slot = f % q;
                f /= q;
            }
            c
        })
        .collect();

    let partials: Vec<Vec<Complex64>> = combos
        .par_iter()
        .map(|combo| {
            let offsets: Vec<f64> = combo.iter().map(|&i| 0.5 * h * gl.nodes[i]).collect();
            let weight: f64 = combo.iter().map(|&i| 0.5 * h * gl.weights[i]).product();
            let mut arrays = vec![vec![Complex64::new(0.0, 0.0); cells]; d * d];
            for flat in 0..cells {
                let idx = cell_index(flat);
                if is_origin_cell(&idx) {
                    continue;
                }
                let x: Vec<f64> = idx
                    .iter()
                    .zip(&offsets)
                    .map(|(&c, o)| -PI + (c as f64 + 0.5) * h + o)
                    .collect();
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let w = if beta != 0.0 { weight * norm.powf(beta) } else { weight };
                let f = density.factor(&x);
                for j in 0..d {
                    for jp in 0..d {
                        arrays[j * d + jp][flat] = f[(j, jp)] * w;
                    }
                }
            }
            for a in arrays.iter_mut() {
                fft_nd(a, &shape, true);
            }
            let mut out = vec![Complex64::new(0.0, 0.0); n_lags * d * d];
            for (lf, lag) in lags.iter().enumerate() {
                let mut phase_arg = 0.0;
                let mut flat = 0usize;
                for (l, &p) in lag.iter().enumerate() {
                    phase_arg += p as f64 * (-PI + 0.5 * h + offsets[l]);
                    flat = flat * m + p.rem_euclid(m as i64) as usize;
                }
                let phase = Complex64::from_polar(1.0, phase_arg);
                for e in 0..d * d {
                    out[lf * d * d + e] = phase * arrays[e][flat];
                }
            }
            out
        })
        .collect();

    let mut total = vec![Complex64::new(0.0, 0.0); n_lags * d * d];
    for part in &partials {
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }

    // cells touching the origin
    for flat in 0..cells {
        let idx = cell_index(flat);
        if !is_origin_cell(&idx) {
            continue;
        }
        let lo: Vec<f64> = idx.iter().map(|&c| -PI + c as f64 * h).collect();
        let hi: Vec<f64> = idx.iter().map(|&c| -PI + (c + 1) as f64 * h).collect();
        // snap the shared edge exactly onto zero
        let lo: Vec<f64> = lo.iter().map(|v| if v.abs() < 0.5 * h { 0.0 } else { *v }).collect();
        let hi: Vec<f64> = hi.iter().map(|v| if v.abs() < 0.5 * h { 0.0 } else { *v }).collect();
        for (x, w) in cell_rule(beta, &lo, &hi, q)? {
            let f = density.factor(&x);
            for (lf, lag) in lags.iter().enumerate() {
                let arg: f64 = lag.iter().zip(&x).map(|(&p, xv)| p as f64 * xv).sum();
                let ph = Complex64::from_polar(w, arg);
                for j in 0..d {
                    for jp in 0..d {
                        total[(lf * d + j) * d + jp] += ph * f[(j, jp)];
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Diagonal lattice model `r_{j,j}(0) = 1`, `r_{j,j}(p) = a_j |p|^{-α}`,
/// independent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawCovariance {
    pub dims: LatticeDims,
    pub alpha: f64,
    pub amplitudes: Vec<f64>,
}

impl PowerLawCovariance {
    pub fn new(dims: LatticeDims, alpha: f64, amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != dims.d {
            return Err(Error::DimensionMismatch { expected: dims.d, got: amplitudes.len() });
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must be positive")));
        }
        Ok(Self { dims, alpha, amplitudes })
    }

    /// For `ν = 1`, the amplitude `(-2ζ(kα))^{-1/k}` cancels the `O(N)` term
    /// of `Σ_{|y|<N} (N-|y|) r(y)^k`, so lattice variances of order-`k`
    /// functionals approach their limit without a linear correction.
    pub fn balanced_amplitude(alpha: f64, k: usize) -> Result<f64> {
        let s = k as f64 * alpha;
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!("kα = {s} must lie in (0, 1)")));
        }
        Ok((-2.0 * zeta(s)).powf(-1.0 / k as f64))
    }

    pub fn value(&self, j: usize, jp: usize, lag: &[i64]) -> f64 {
        if j != jp {
            return 0.0;
        }
        let n2: i64 = lag.iter().map(|p| p * p).sum();
        if n2 == 0 {
            1.0
        } else {
            self.amplitudes[j] * (n2 as f64).powf(-0.5 * self.alpha)
        }
    }

    pub fn table(&self, max_lag: usize) -> CovarianceTable {
        CovarianceTable::from_fn(self.dims, max_lag, |lag, j, jp| self.value(j, jp, lag))
    }
}
