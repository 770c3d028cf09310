//! Samplers for the limit `S₀(t)` and its second moments.

use super::increments::{IncrementSampler, SymmetricPartition};
use super::integral::{multiple_integrals, SumConvolver};
use super::kernel::KernelSpec;
use crate::error::{Error, Result};
use crate::hermite::{HermiteExpansion, IndexMaps};
use crate::linalg::{hermitian_eigen, real_to_complex, RMatrix};
use crate::numerics::{beta, gamma};
use crate::rng::{fill_standard_normal, stream, StreamTag};
use crate::spectral_measure::{LimitSpectralModel, MatrixSpectralMeasureOnGrid};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// All permutations of `0..k`.
fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

struct Term {
    jseq: Vec<usize>,
    coef: f64,
}

fn terms_of(h: &HermiteExpansion<f64>) -> Vec<Term> {
    h.terms()
        .iter()
        .filter(|(_, &c)| c != 0.0)
        .map(|(multi, &c)| Term { jseq: IndexMaps::sequence_of(multi), coef: c })
        .collect()
}

/// `∫_0^∞ f_a(s) conj f_b(s) s^{β−1} ds` for `f_t(s) = (e^{its} − 1)/(is)`,
/// `0 < β < 1`, via the continued Mellin transform of `e^{iωs}`.
pub fn kernel_mellin(a: f64, b: f64, beta_exp: f64) -> Complex64 {
    let mu = beta_exp - 2.0;
    let g = gamma(mu);
    [(a - b, 1.0), (a, -1.0), (-b, -1.0)]
        .iter()
        .filter(|(w, _)| *w != 0.0)
        .map(|&(w, c)| Complex64::from_polar(c * g * w.abs().powf(-mu), PI * mu * w.signum() / 2.0))
        .sum()
}

/// Density of the `k`-fold sum of independent-looking arguments with
/// densities `P_i x_+^{α−1} + M_i x_−^{α−1}`: returns the coefficients of
/// `s_+^{kα−1}` and `s_−^{kα−1}`.
fn sum_density(plus: &[Complex64], minus: &[Complex64], alpha: f64) -> (Complex64, Complex64) {
    let k = plus.len();
    let fold = |p: usize| gamma(alpha).powi(p as i32) / gamma(p as f64 * alpha);
    let mut dp = Complex64::new(0.0, 0.0);
    let mut dm = Complex64::new(0.0, 0.0);
    for mask in 0..(1usize << k) {
        let mut coef = Complex64::new(1.0, 0.0);
        let mut p = 0;
        for i in 0..k {
            if mask >> i & 1 == 1 {
                coef *= plus[i];
                p += 1;
            } else {
                coef *= minus[i];
            }
        }
        let q = k - p;
        if q == 0 {
            dp += coef * fold(p);
        } else if p == 0 {
            dm += coef * fold(q);
        } else {
            let (a, b) = (p as f64 * alpha, q as f64 * alpha);
            let base = coef * fold(p) * fold(q);
            dp += base * beta(b, 1.0 - a - b);
            dm += base * beta(a, 1.0 - a - b);
        }
    }
    (dp, dm)
}

/// Exact `E[S₀(t_a) S₀(t_b)]` for `ν = 1` from the isometry of the multiple
/// integrals against the homogeneous limit measure.
pub fn limit_covariance(h: &HermiteExpansion<f64>, limit: &LimitSpectralModel, ts: &[f64]) -> Result<RMatrix> {
    if limit.dims.nu != 1 {
        return Err(Error::Dimensionality { dim: limit.dims.nu, limit: 1 });
    }
    let k = h.k();
    let alpha = limit.alpha;
    if k as f64 * alpha >= 1.0 {
        return Err(Error::InvalidParameter(format!("k·α = {} must be below 1", k as f64 * alpha)));
    }
    let bp = limit.b_matrix(&[1.0]) * Complex64::new(limit.h0, 0.0);
    let bm = limit.b_matrix(&[-1.0]) * Complex64::new(limit.h0, 0.0);
    let terms = terms_of(h);
    let perms = permutations(k);
    let (mut dp, mut dm) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for x in &terms {
        for y in &terms {
            for pi in &perms {
                let plus: Vec<Complex64> = (0..k).map(|i| bp[(x.jseq[i], y.jseq[pi[i]])]).collect();
                let minus: Vec<Complex64> = (0..k).map(|i| bm[(x.jseq[i], y.jseq[pi[i]])]).collect();
                let (p, m) = sum_density(&plus, &minus, alpha);
                dp += p * x.coef * y.coef;
                dm += m * x.coef * y.coef;
            }
        }
    }
    let kb = ts.len();
    let beta_exp = k as f64 * alpha;
    Ok(RMatrix::from_fn(kb, kb, |a, b| {
        let i = kernel_mellin(ts[a], ts[b], beta_exp);
        (dp * i + dm * i.conj()).re
    }))
}

/// `E[S(t_a) S(t_b)]` for the discretized integrals on the grid measure.
pub fn discrete_covariance(
    h: &HermiteExpansion<f64>,
    measure: &MatrixSpectralMeasureOnGrid,
    ts: &[Vec<f64>],
) -> Result<RMatrix> {
    let k = h.k();
    let conv = SumConvolver::new(measure.grid, k);
    let terms = terms_of(h);
    let perms = permutations(k);
    let kb = ts.len();
    let kernels: Vec<KernelSpec> = ts.iter().map(|t| KernelSpec::limit_at(1.0, t.clone(), k)).collect();
    let weights: Vec<Box<dyn Fn(&[f64]) -> Complex64 + '_>> = (0..kb * kb)
        .map(|e| {
            let (fa, fb) = (&kernels[e / kb], &kernels[e % kb]);
            Box::new(move |s: &[f64]| fa.eval_sum(s) * fb.eval_sum(s).conj()) as Box<dyn Fn(&[f64]) -> Complex64>
        })
        .collect();
    let weight_refs: Vec<&dyn Fn(&[f64]) -> Complex64> = weights.iter().map(|b| b.as_ref()).collect();
    let d = measure.d;
    let spectra: Vec<Vec<Complex64>> = (0..d * d).map(|e| conv.spectrum(&measure.entry(e / d, e % d))).collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); kb * kb];
    for x in &terms {
        for y in &terms {
            for pi in &perms {
                let refs: Vec<&[Complex64]> =
                    (0..k).map(|i| spectra[x.jseq[i] * d + y.jseq[pi[i]]].as_slice()).collect();
                let vals = conv.pair_with(conv.product(&refs), k, &weight_refs);
                for (a, v) in acc.iter_mut().zip(vals) {
                    *a += v * x.coef * y.coef;
                }
            }
        }
    }
    Ok(RMatrix::from_fn(kb, kb, |a, b| acc[a * kb + b].re))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompensatorReport {
    pub continuum: Vec<Vec<f64>>,
    pub discrete: Vec<Vec<f64>>,
    /// Smallest eigenvalue of the difference before clipping.
    pub min_eigenvalue: f64,
    /// Compensator variance as a fraction of the continuum variance, per `t`.
    pub fractions: Vec<f64>,
}

fn rows(m: &RMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

/// Joint sampler of `(S₀(t_1), …, S₀(t_K))` on a fixed partition.
///
/// For `ν = 1` an independent Gaussian with covariance equal to the exact
/// second moments minus those of the truncated discretization is added, which
/// restores the mass outside `[-T, T)` and the cell-quadrature defect.
pub struct LimitSampler {
    k: usize,
    partition: SymmetricPartition,
    increments: IncrementSampler,
    terms: Vec<(Vec<usize>, Vec<KernelSpec>)>,
    outputs: usize,
    compensator: Option<RMatrix>,
    report: Option<CompensatorReport>,
}

impl LimitSampler {
    pub fn new(
        h: &HermiteExpansion<f64>,
        limit: &LimitSpectralModel,
        partition: SymmetricPartition,
        ts: Vec<Vec<f64>>,
        compensate: bool,
    ) -> Result<Self> {
        let nu = limit.dims.nu;
        if partition.nu != nu || ts.iter().any(|t| t.len() != nu) {
            return Err(Error::DimensionMismatch { expected: nu, got: partition.nu });
        }
        if h.d() != limit.dims.d {
            return Err(Error::DimensionMismatch { expected: limit.dims.d, got: h.d() });
        }
        if ts.iter().flatten().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter("t must have non-negative coordinates".into()));
        }
        let k = h.k();
        let measure = partition.measure(limit)?;
        let increments = IncrementSampler::new(&measure)?;
        let terms = terms_of(h)
            .into_iter()
            .map(|t| {
                let kernels = ts.iter().map(|tv| KernelSpec::limit_at(t.coef, tv.clone(), k)).collect();
                (t.jseq, kernels)
            })
            .collect();
        let (compensator, report) = if compensate && nu == 1 {
            let flat: Vec<f64> = ts.iter().map(|t| t[0]).collect();
            let full = limit_covariance(h, limit, &flat)?;
            let disc = discrete_covariance(h, &measure, &ts)?;
            let diff = &full - &disc;
            let (vals, vecs) = hermitian_eigen(&real_to_complex(&diff));
            let n = vals.len();
            let factor = RMatrix::from_fn(n, n, |r, c| {
                if full[(r, r)] == 0.0 {
                    0.0
                } else {
                    (vecs[(r, c)] * vals[c].max(0.0).sqrt()).re
                }
            });
            let fractions = (0..n)
                .map(|i| if full[(i, i)] > 0.0 { diff[(i, i)] / full[(i, i)] } else { 0.0 })
                .collect();
            let report = CompensatorReport {
                continuum: rows(&full),
                discrete: rows(&disc),
                min_eigenvalue: vals.first().copied().unwrap_or(0.0),
                fractions,
            };
            (Some(factor), Some(report))
        } else {
            (None, None)
        };
        let outputs = ts.len();
        Ok(Self { k, partition, increments, terms, outputs, compensator, report })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn partition(&self) -> SymmetricPartition {
        self.partition
    }

    pub fn compensator_report(&self) -> Option<&CompensatorReport> {
        self.report.as_ref()
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> Result<Vec<f64>> {
        let inc = self.increments.sample(seed, replicate);
        let mut out = vec![0.0; self.outputs];
        for (jseq, kernels) in &self.terms {
            for (o, v) in out.iter_mut().zip(multiple_integrals(kernels, &inc, jseq)?) {
                *o += v;
            }
        }
        if let Some(f) = &self.compensator {
            let mut rng = stream(seed, StreamTag::TailCompensator, replicate);
            let mut xi = vec![0.0; f.ncols()];
            fill_standard_normal(&mut rng, &mut xi);
            for (r, o) in out.iter_mut().enumerate() {
                *o += (0..xi.len()).map(|c| f[(r, c)] * xi[c]).sum::<f64>();
            }
        }
        Ok(out)
    }

    /// Replicates `0..count`, in order, computed in parallel.
    pub fn sample_many(&self, seed: u64, count: u64) -> Result<Vec<Vec<f64>>> {
        (0..count).into_par_iter().map(|r| self.sample(seed, r)).collect()
    }
}

pub fn sample_limit(
    h: &HermiteExpansion<f64>,
    limit: &LimitSpectralModel,
    partition: SymmetricPartition,
    seed: u64,
    replicate: u64,
) -> Result<f64> {
    let ones = vec![vec![1.0; limit.dims.nu]];
    Ok(LimitSampler::new(h, limit, partition, ones, true)?.sample(seed, replicate)?[0])
}

pub fn sample_limit_joint(
    h: &HermiteExpansion<f64>,
    limit: &LimitSpectralModel,
    partition: SymmetricPartition,
    ts: Vec<Vec<f64>>,
    seed: u64,
    replicate: u64,
) -> Result<Vec<f64>> {
    LimitSampler::new(h, limit, partition, ts, true)?.sample(seed, replicate)
}
