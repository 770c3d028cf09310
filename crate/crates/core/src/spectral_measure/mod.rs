//! Matrix-valued spectral measures on symmetric cell grids, their rescalings
//! and homogeneous limits.

mod diagnostics;
mod limit;

pub use diagnostics::{
    bump_integral_limit, bump_integral_rescaled, lattice_transform, measure_transform, measure_transform_exact_cells,
    quadratic_form_measures, rescaled_tail_mass, rescaled_tail_profile, Bump, TailProfile,
};
pub use limit::LimitSpectralModel;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::lrd_model::{cell_mass, SlowVarying, SpectralDensity};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;

/// Uniform grid of `cells^ν` half-open cells on `[-B, B)^ν`, `cells` even.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGrid {
    pub nu: usize,
    pub half_width: f64,
    pub cells: usize,
}

impl CellGrid {
    pub fn new(nu: usize, half_width: f64, cells: usize) -> Result<Self> {
        if nu == 0 || cells == 0 || cells % 2 != 0 || !(half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid needs nu ≥ 1, an even positive cell count and positive width (got {nu}, {cells}, {half_width})"
            )));
        }
        Ok(Self { nu, half_width, cells })
    }

    /// The torus `[-Nπ, Nπ)^ν`.
    pub fn torus(nu: usize, n: u64, cells: usize) -> Result<Self> {
        Self::new(nu, n as f64 * PI, cells)
    }

    pub fn width(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    pub fn count(&self) -> usize {
        self.cells.pow(self.nu as u32)
    }

    pub fn index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.nu];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.cells;
            flat /= self.cells;
        }
        idx
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.cells + i)
    }

    pub fn bounds(&self, flat: usize) -> (Vec<f64>, Vec<f64>) {
        let w = self.width();
        let idx = self.index(flat);
        let lo: Vec<f64> = idx.iter().map(|&i| snap(-self.half_width + i as f64 * w)).collect();
        let hi: Vec<f64> = idx.iter().map(|&i| snap(-self.half_width + (i + 1) as f64 * w)).collect();
        (lo, hi)
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        let w = self.width();
        self.index(flat).iter().map(|&i| -self.half_width + (i as f64 + 0.5) * w).collect()
    }

    /// The cell `-Δ`.
    pub fn negate(&self, flat: usize) -> usize {
        let idx: Vec<usize> = self.index(flat).iter().map(|&i| self.cells - 1 - i).collect();
        self.flat(&idx)
    }
}

/// Grid lines that should be zero come out as tiny multiples of `π`.
fn snap(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        0.0
    } else {
        v
    }
}

/// Anything that can report the mass of an axis-parallel rectangle.
pub trait RectMeasure: Sync {
    fn d(&self) -> usize;
    fn nu(&self) -> usize;
    fn mass(&self, lo: &[f64], hi: &[f64]) -> Result<CMatrix>;
}

/// A spectral density restricted to the torus `[-π, π)^ν`.
pub struct DensityOnTorus<'a> {
    pub density: &'a dyn SpectralDensity,
    pub nodes: usize,
}

impl RectMeasure for DensityOnTorus<'_> {
    fn d(&self) -> usize {
        self.density.dims().d
    }

    fn nu(&self) -> usize {
        self.density.dims().nu
    }

    fn mass(&self, lo: &[f64], hi: &[f64]) -> Result<CMatrix> {
        let d = self.d();
        let Some((lo, hi)) = clip(lo, hi, PI) else {
            return Ok(CMatrix::zeros(d, d));
        };
        // keep pieces small enough for a fixed-order rule
        let pieces: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| ((b - a) / 0.05).ceil().max(1.0) as usize).collect();
        let mut acc = CMatrix::zeros(d, d);
        let total: usize = pieces.iter().product();
        for mut flat in 0..total {
            let mut a = vec![0.0; lo.len()];
            let mut b = vec![0.0; lo.len()];
            for l in (0..lo.len()).rev() {
                let i = flat % pieces[l];
                flat /= pieces[l];
                let w = (hi[l] - lo[l]) / pieces[l] as f64;
                a[l] = lo[l] + i as f64 * w;
                b[l] = if i + 1 == pieces[l] { hi[l] } else { lo[l] + (i + 1) as f64 * w };
            }
            acc += cell_mass(self.density, &a, &b, self.nodes)?;
        }
        Ok(acc)
    }
}

fn clip(lo: &[f64], hi: &[f64], bound: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let a: Vec<f64> = lo.iter().map(|v| v.max(-bound)).collect();
    let b: Vec<f64> = hi.iter().map(|v| v.min(bound)).collect();
    if a.iter().zip(&b).any(|(x, y)| x >= y) {
        None
    } else {
        Some((a, b))
    }
}

/// `A ↦ N^α / L(N) · G(A/N)`, supported on `[-Nπ, Nπ)^ν`.
pub struct Rescaled<'a> {
    pub inner: &'a dyn RectMeasure,
    pub n: u64,
    pub alpha: f64,
    pub slow: SlowVarying,
}

impl RectMeasure for Rescaled<'_> {
    fn d(&self) -> usize {
        self.inner.d()
    }

    fn nu(&self) -> usize {
        self.inner.nu()
    }

    fn mass(&self, lo: &[f64], hi: &[f64]) -> Result<CMatrix> {
        let nf = self.n as f64;
        let Some((lo, hi)) = clip(lo, hi, nf * PI) else {
            return Ok(CMatrix::zeros(self.d(), self.d()));
        };
        let a: Vec<f64> = lo.iter().map(|v| v / nf).collect();
        let b: Vec<f64> = hi.iter().map(|v| v / nf).collect();
        let scale = nf.powf(self.alpha) / self.slow.eval(nf);
        Ok(self.inner.mass(&a, &b)? * Complex64::new(scale, 0.0))
    }
}

/// Per-cell `d × d` masses.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSpectralMeasureOnGrid {
    pub grid: CellGrid,
    pub d: usize,
    pub masses: Vec<CMatrix>,
}

impl MatrixSpectralMeasureOnGrid {
    pub fn new(grid: CellGrid, d: usize, masses: Vec<CMatrix>) -> Result<Self> {
        if masses.len() != grid.count() {
            return Err(Error::DimensionMismatch { expected: grid.count(), got: masses.len() });
        }
        Ok(Self { grid, d, masses })
    }

    pub fn from_rect_measure(m: &dyn RectMeasure, grid: CellGrid) -> Result<Self> {
        let masses = (0..grid.count())
            .into_par_iter()
            .map(|flat| {
                let (lo, hi) = grid.bounds(flat);
                m.mass(&lo, &hi)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, m.d(), masses)
    }

    /// Cell masses of a density on a grid inside `[-π, π)^ν`.
    pub fn from_density(density: &dyn SpectralDensity, grid: CellGrid, nodes: usize) -> Result<Self> {
        if grid.half_width > PI * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter("grid exceeds the torus".into()));
        }
        let masses = (0..grid.count())
            .into_par_iter()
            .map(|flat| {
                let (lo, hi) = grid.bounds(flat);
                cell_mass(density, &lo, &hi, nodes)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, density.dims().d, masses)
    }

    pub fn total(&self) -> CMatrix {
        self.masses.iter().fold(CMatrix::zeros(self.d, self.d), |a, m| a + m)
    }

    /// Real diagonal masses `G_{j,j}(Δ)` in cell order.
    pub fn diagonal(&self, j: usize) -> Vec<f64> {
        self.masses.iter().map(|m| m[(j, j)].re).collect()
    }

    pub fn entry(&self, j: usize, jp: usize) -> Vec<Complex64> {
        self.masses.iter().map(|m| m[(j, jp)]).collect()
    }

    /// Checks per-cell PSD (min eigenvalue ≥ `-psd_tol`), evenness under cell
    /// negation and the Cauchy–Schwarz bound on cross entries.
    pub fn validate(&self, psd_tol: f64) -> Result<()> {
        for (flat, m) in self.masses.iter().enumerate() {
            let (ev, _) = hermitian_eigen(m);
            if ev.first().is_some_and(|&v| v < -psd_tol) {
                return Err(Error::NotPositiveSemidefinite { min_eigenvalue: ev[0] });
            }
            let neg = &self.masses[self.grid.negate(flat)];
            let scale = m.iter().fold(1e-300f64, |a, z| a.max(z.norm()));
            for j in 0..self.d {
                for jp in 0..self.d {
                    if (neg[(j, jp)] - m[(j, jp)].conj()).norm() > 1e-9 * scale {
                        return Err(Error::ModelValidation(format!("cell {flat} breaks evenness")));
                    }
                    let cs = m[(j, j)].re * m[(jp, jp)].re;
                    if m[(j, jp)].norm_sqr() > cs * (1.0 + 1e-9) + psd_tol {
                        return Err(Error::ModelValidation(format!("cell {flat} breaks Cauchy–Schwarz")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let nu = self.grid.nu;
        let lo: Vec<String> = (1..=nu).map(|l| format!("lo{l}")).collect();
        let hi: Vec<String> = (1..=nu).map(|l| format!("hi{l}")).collect();
        writeln!(w, "{},{},j,jp,re,im", lo.join(","), hi.join(","))?;
        for (flat, m) in self.masses.iter().enumerate() {
            let (a, b) = self.grid.bounds(flat);
            let a: Vec<String> = a.iter().map(|v| format!("{v:.17e}")).collect();
            let b: Vec<String> = b.iter().map(|v| format!("{v:.17e}")).collect();
            for j in 0..self.d {
                for jp in 0..self.d {
                    let z = m[(j, jp)];
                    writeln!(w, "{},{},{j},{jp},{:.17e},{:.17e}", a.join(","), b.join(","), z.re, z.im)?;
                }
            }
        }
        Ok(())
    }
}

impl RectMeasure for MatrixSpectralMeasureOnGrid {
    fn d(&self) -> usize {
        self.d
    }

    fn nu(&self) -> usize {
        self.grid.nu
    }

    /// Exact when the rectangle is a union of cells; otherwise a
    /// grid-incompatibility error.
    fn mass(&self, lo: &[f64], hi: &[f64]) -> Result<CMatrix> {
        let Some((lo, hi)) = clip(lo, hi, self.grid.half_width) else {
            return Ok(CMatrix::zeros(self.d, self.d));
        };
        let w = self.grid.width();
        let mut ranges = Vec::with_capacity(lo.len());
        for (a, b) in lo.iter().zip(&hi) {
            let ia = (a + self.grid.half_width) / w;
            let ib = (b + self.grid.half_width) / w;
            let (ra, rb) = (ia.round(), ib.round());
            if (ia - ra).abs() > 1e-9 || (ib - rb).abs() > 1e-9 {
                return Err(Error::GridIncompatibility(format!(
                    "[{a}, {b}) does not align with cells of width {w}"
                )));
            }
            ranges.push((ra as usize, rb as usize));
        }
        let mut acc = CMatrix::zeros(self.d, self.d);
        for flat in 0..self.grid.count() {
            let idx = self.grid.index(flat);
            if idx.iter().zip(&ranges).all(|(&i, &(a, b))| i >= a && i < b) {
                acc += &self.masses[flat];
            }
        }
        Ok(acc)
    }
}

/// Rescaled measure on `[-Nπ, Nπ)^ν` with the source's cell count.
pub fn rescale_measure(
    g: &MatrixSpectralMeasureOnGrid,
    n: u64,
    slow: SlowVarying,
    alpha: f64,
) -> Result<MatrixSpectralMeasureOnGrid> {
    rescale_measure_onto(g, n, slow, alpha, g.grid.cells)
}

/// Rescaled measure on a target grid of `target_cells` per axis; each target
/// cell divided by `N` must be a union of source cells.
pub fn rescale_measure_onto(
    g: &MatrixSpectralMeasureOnGrid,
    n: u64,
    slow: SlowVarying,
    alpha: f64,
    target_cells: usize,
) -> Result<MatrixSpectralMeasureOnGrid> {
    if (g.grid.half_width - PI).abs() > 1e-12 {
        return Err(Error::InvalidParameter("source measure must live on [-π, π)^ν".into()));
    }
    if target_cells == 0 || g.grid.cells % target_cells != 0 {
        return Err(Error::GridIncompatibility(format!(
            "{} source cells per axis are not a refinement of {target_cells}",
            g.grid.cells
        )));
    }
    let grid = CellGrid::torus(g.grid.nu, n, target_cells)?;
    let scale = Complex64::new((n as f64).powf(alpha) / slow.eval(n as f64), 0.0);
    let ratio = g.grid.cells / target_cells;
    let masses = (0..grid.count())
        .map(|flat| {
            let idx = grid.index(flat);
            let mut acc = CMatrix::zeros(g.d, g.d);
            let sub = ratio.pow(g.grid.nu as u32);
            for s in 0..sub {
                let mut rem = s;
                let mut src = vec![0; idx.len()];
                for l in (0..idx.len()).rev() {
                    src[l] = idx[l] * ratio + rem % ratio;
                    rem /= ratio;
                }
                acc += &g.masses[g.grid.flat(&src)];
            }
            acc * scale
        })
        .collect();
    MatrixSpectralMeasureOnGrid::new(grid, g.d, masses)
}
