//! Symmetric partitions of `[-T, T)^ν` and Hermitian random increments on them.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_sqrt, CMatrix};
use crate::rng::{standard_normal, stream, StreamTag};
use crate::spectral_measure::{CellGrid, MatrixSpectralMeasureOnGrid, RectMeasure};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

const PSD_TOLERANCE: f64 = 1e-10;

/// Cells of `[-T, T)^ν`, `M` per axis, paired under negation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPartition {
    pub truncation: f64,
    pub cells: usize,
    pub nu: usize,
}

impl Default for SymmetricPartition {
    fn default() -> Self {
        Self { truncation: 64.0, cells: 512, nu: 1 }
    }
}

impl SymmetricPartition {
    pub fn new(nu: usize, truncation: f64, cells: usize) -> Result<Self> {
        CellGrid::new(nu, truncation, cells)?;
        Ok(Self { truncation, cells, nu })
    }

    pub fn grid(&self) -> CellGrid {
        CellGrid { nu: self.nu, half_width: self.truncation, cells: self.cells }
    }

    /// Both `T` and `M` doubled, so the cell width is unchanged.
    pub fn extended(&self) -> Self {
        Self { truncation: 2.0 * self.truncation, cells: 2 * self.cells, nu: self.nu }
    }

    /// Same box, cells halved.
    pub fn refined(&self) -> Self {
        Self { cells: 2 * self.cells, ..*self }
    }

    /// One cell out of every `{Δ, -Δ}` pair. With `M` even no cell is its own
    /// mirror, so there is no origin cell to exclude.
    pub fn representatives(&self) -> Vec<usize> {
        let g = self.grid();
        (0..g.count()).filter(|&f| f < g.negate(f)).collect()
    }

    pub fn measure(&self, m: &dyn RectMeasure) -> Result<MatrixSpectralMeasureOnGrid> {
        if m.nu() != self.nu {
            return Err(Error::DimensionMismatch { expected: self.nu, got: m.nu() });
        }
        MatrixSpectralMeasureOnGrid::from_rect_measure(m, self.grid())
    }
}

/// `values[j][cell]` over every cell of the grid, mirrored cells included.
/// `pairing` is `Σ_Δ E[Z(Δ) Z(-Δ)ᵀ]`, the total mass of the grid measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralIncrementSample {
    pub grid: CellGrid,
    pub values: Vec<Vec<Complex64>>,
    pub pairing: CMatrix,
}

impl SpectralIncrementSample {
    pub fn d(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, j: usize, cell: usize) -> Complex64 {
        self.values[j][cell]
    }
}

/// Per-cell Hermitian square roots, computed once and reused across replicates.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    grid: CellGrid,
    d: usize,
    reps: Vec<usize>,
    keys: Vec<u128>,
    roots: Vec<CMatrix>,
    pairing: CMatrix,
}

const KEY_BITS: u32 = 20;
const WORDS_PER_CELL: u32 = 16;

/// Position of a cell's noise in the replicate stream, keyed by its signed
/// integer offset from the origin so that partitions sharing a cell width
/// share the noise of their common cells.
fn cell_key(grid: &CellGrid, cell: usize) -> u128 {
    let half = (grid.cells / 2) as i64;
    grid.index(cell).iter().fold(0u128, |acc, &i| {
        let s = i as i64 - half;
        let zig = ((s << 1) ^ (s >> 63)) as u64 as u128;
        (acc << KEY_BITS) | zig
    }) << WORDS_PER_CELL
}

impl IncrementSampler {
    pub fn new(measure: &MatrixSpectralMeasureOnGrid) -> Result<Self> {
        let grid = measure.grid;
        let reps: Vec<usize> = (0..grid.count()).filter(|&f| f < grid.negate(f)).collect();
        let roots = reps
            .iter()
            .map(|&f| hermitian_sqrt(&measure.masses[f], PSD_TOLERANCE))
            .collect::<Result<Vec<_>>>()?;
        if grid.nu as u32 * KEY_BITS + WORDS_PER_CELL > 120 || grid.cells >= 1 << KEY_BITS {
            return Err(Error::Dimensionality { dim: grid.count(), limit: 1 << KEY_BITS });
        }
        let keys = reps.iter().map(|&f| cell_key(&grid, f)).collect();
        Ok(Self { grid, d: measure.d, reps, keys, roots, pairing: measure.total() })
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> SpectralIncrementSample {
        let mut rng = stream(seed, StreamTag::SpectralIncrements, replicate);
        let zero = Complex64::new(0.0, 0.0);
        let mut values = vec![vec![zero; self.grid.count()]; self.d];
        let mut zeta = vec![zero; self.d];
        for ((&cell, q), &key) in self.reps.iter().zip(&self.roots).zip(&self.keys) {
            rng.set_word_pos(key);
            for z in zeta.iter_mut() {
                let re = standard_normal(&mut rng);
                let im = standard_normal(&mut rng);
                *z = Complex64::new(re, im) * FRAC_1_SQRT_2;
            }
            let mirror = self.grid.negate(cell);
            for j in 0..self.d {
                let v: Complex64 = (0..self.d).map(|i| q[(j, i)] * zeta[i]).sum();
                values[j][cell] = v;
                values[j][mirror] = v.conj();
            }
        }
        SpectralIncrementSample { grid: self.grid, values, pairing: self.pairing.clone() }
    }
}

pub fn sample_increments(
    measure: &MatrixSpectralMeasureOnGrid,
    seed: u64,
    replicate: u64,
) -> Result<SpectralIncrementSample> {
    Ok(IncrementSampler::new(measure)?.sample(seed, replicate))
}
