//! Wick-ordered discrete multiple integrals.
//!
//! Every kernel here depends on its arguments only through their sum, so the
//! sum over cell tuples collapses to a convolution of the increment sequences,
//! evaluated by FFT.

use super::increments::SpectralIncrementSample;
use super::kernel::KernelSpec;
use crate::error::{Error, Result};
use crate::fft::fft_nd;
use crate::spectral_measure::CellGrid;
use num_complex::Complex64;
use std::collections::HashMap;

const RESIDUE_RELATIVE: f64 = 1e-6;
const RESIDUE_ABSOLUTE: f64 = 1e-10;

/// Zero-padded transforms of sequences on a cell grid, sized for sums of up
/// to `arity` cell centers.
pub(crate) struct SumConvolver {
    grid: CellGrid,
    side: usize,
    shape: Vec<usize>,
}

impl SumConvolver {
    pub(crate) fn new(grid: CellGrid, arity: usize) -> Self {
        let side = (arity.max(1) * grid.cells).next_power_of_two();
        Self { grid, side, shape: vec![side; grid.nu] }
    }

    fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub(crate) fn spectrum(&self, seq: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len()];
        for (cell, v) in seq.iter().enumerate() {
            let idx = self.grid.index(cell);
            buf[idx.iter().fold(0, |a, &i| a * self.side + i)] = *v;
        }
        fft_nd(&mut buf, &self.shape, false);
        buf
    }

    pub(crate) fn product(&self, spectra: &[&[Complex64]]) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(1.0, 0.0); self.len()];
        for s in spectra {
            for (a, b) in acc.iter_mut().zip(s.iter()) {
                *a *= b;
            }
        }
        acc
    }

    /// `Σ_s f(s) (q_1 * … * q_p)(s)` for each kernel, given the product of
    /// the `p` spectra.
    pub(crate) fn pair_with(&self, mut prod: Vec<Complex64>, p: usize, weights: &[&dyn Fn(&[f64]) -> Complex64]) -> Vec<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        if p == 0 {
            let origin = vec![0.0; self.grid.nu];
            return weights.iter().map(|f| f(&origin)).collect();
        }
        fft_nd(&mut prod, &self.shape, true);
        let norm = 1.0 / self.len() as f64;
        let w = self.grid.width();
        let reach = p * (self.grid.cells - 1) + 1;
        let nu = self.grid.nu;
        let mut out = vec![zero; weights.len()];
        let mut s = vec![0.0; nu];
        for flat in 0..reach.pow(nu as u32) {
            let mut rem = flat;
            let mut pos = 0;
            for l in (0..nu).rev() {
                let n = rem % reach;
                rem /= reach;
                s[l] = -(p as f64) * self.grid.half_width + (n as f64 + 0.5 * p as f64) * w;
            }
            rem = flat;
            let mut stride = 1;
            for _ in 0..nu {
                pos += (rem % reach) * stride;
                rem /= reach;
                stride *= self.side;
            }
            let v = prod[pos] * norm;
            if v == zero {
                continue;
            }
            for (o, f) in out.iter_mut().zip(weights) {
                *o += f(&s) * v;
            }
        }
        out
    }
}

/// Partial matchings of `0..k` as lists of pairs.
pub(crate) fn partial_matchings(k: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(rest: &[usize], acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let Some((&first, tail)) = rest.split_first() else {
            out.push(acc.clone());
            return;
        };
        rec(tail, acc, out);
        for (i, &other) in tail.iter().enumerate() {
            let mut remaining = tail.to_vec();
            remaining.remove(i);
            acc.push((first, other));
            rec(&remaining, acc, out);
            acc.pop();
        }
    }
    let slots: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    rec(&slots, &mut Vec::new(), &mut out);
    out
}

/// Complex values of several Wick-ordered integrals sharing one increment
/// sample and one index sequence.
pub fn multiple_integrals_complex(
    kernels: &[KernelSpec],
    inc: &SpectralIncrementSample,
    jseq: &[usize],
) -> Result<Vec<Complex64>> {
    // The kernels are symmetric, so a canonical slot order makes the result
    // independent of how the caller lists the indices.
    let mut jseq = jseq.to_vec();
    jseq.sort_unstable();
    let k = jseq.len();
    for kern in kernels {
        if kern.k != k || kern.nu != inc.grid.nu {
            return Err(Error::DimensionMismatch { expected: k, got: kern.k });
        }
    }
    if let Some(&j) = jseq.iter().find(|&&j| j >= inc.d()) {
        return Err(Error::DimensionMismatch { expected: inc.d(), got: j + 1 });
    }
    let conv = SumConvolver::new(inc.grid, k);
    let mut spectra: HashMap<usize, Vec<Complex64>> = HashMap::new();
    for &j in &jseq {
        spectra.entry(j).or_insert_with(|| conv.spectrum(&inc.values[j]));
    }
    let weights: Vec<Box<dyn Fn(&[f64]) -> Complex64 + '_>> =
        kernels.iter().map(|kern| Box::new(move |s: &[f64]| kern.eval_sum(s)) as Box<dyn Fn(&[f64]) -> Complex64>).collect();
    let weight_refs: Vec<&dyn Fn(&[f64]) -> Complex64> = weights.iter().map(|b| b.as_ref()).collect();

    let mut cache: HashMap<Vec<usize>, Vec<Complex64>> = HashMap::new();
    let mut total = vec![Complex64::new(0.0, 0.0); kernels.len()];
    for matching in partial_matchings(k) {
        let mut paired = vec![false; k];
        let mut factor = Complex64::new(1.0, 0.0);
        for &(a, b) in &matching {
            paired[a] = true;
            paired[b] = true;
            factor *= -inc.pairing[(jseq[a], jseq[b])];
        }
        let mut free: Vec<usize> = (0..k).filter(|&i| !paired[i]).map(|i| jseq[i]).collect();
        free.sort_unstable();
        let vals = cache.entry(free.clone()).or_insert_with(|| {
            let refs: Vec<&[Complex64]> = free.iter().map(|j| spectra[j].as_slice()).collect();
            conv.pair_with(conv.product(&refs), free.len(), &weight_refs)
        });
        for (t, v) in total.iter_mut().zip(vals.iter()) {
            *t += factor * v;
        }
    }
    Ok(total)
}

fn check_real(v: Complex64) -> Result<f64> {
    if v.im.abs() > RESIDUE_RELATIVE * v.re.abs() + RESIDUE_ABSOLUTE {
        return Err(Error::ImaginaryResidue { real: v.re, imag: v.im });
    }
    Ok(v.re)
}

/// Real values of several integrals; each must have a negligible imaginary part.
pub fn multiple_integrals(kernels: &[KernelSpec], inc: &SpectralIncrementSample, jseq: &[usize]) -> Result<Vec<f64>> {
    multiple_integrals_complex(kernels, inc, jseq)?.into_iter().map(check_real).collect()
}

pub fn multiple_integral(kernel: &KernelSpec, inc: &SpectralIncrementSample, jseq: &[usize]) -> Result<f64> {
    Ok(multiple_integrals(std::slice::from_ref(kernel), inc, jseq)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_counts() {
        let counts: Vec<usize> = (0..6).map(|k| partial_matchings(k).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 4, 10, 26]);
    }
}
