//! Hermite functionals of a sampled field, their normalized block sums and
//! exact second moments for diagonal models.

use crate::error::{Error, Result};
use crate::field_sampler::{FieldSample, FieldSampler};
use crate::hermite::{HermiteExpansion, ProductHermite, TailExpansion};
use crate::lrd_model::{CovarianceTable, LongRangeParams, SlowVarying};
use rayon::prelude::*;
use serde::Serialize;

const UNIT_VARIANCE_TOLERANCE: f64 = 1e-9;
const DIAGONAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct NormalizedSumSpec {
    pub nu: usize,
    pub params: LongRangeParams,
    pub slow: SlowVarying,
    pub h: HermiteExpansion<f64>,
    pub tail: Option<TailExpansion<f64>>,
}

impl NormalizedSumSpec {
    pub fn new(nu: usize, params: LongRangeParams, slow: SlowVarying, h: HermiteExpansion<f64>) -> Result<Self> {
        if h.k() != params.k {
            return Err(Error::InvalidParameter(format!("expansion order {} differs from k = {}", h.k(), params.k)));
        }
        LongRangeParams::new(params.alpha, params.k, nu)?;
        Ok(Self { nu, params, slow, h, tail: None })
    }

    pub fn with_tail(mut self, tail: TailExpansion<f64>) -> Result<Self> {
        if tail.d() != self.h.d() || tail.k() != self.h.k() {
            return Err(Error::DimensionMismatch { expected: self.h.d(), got: tail.d() });
        }
        self.tail = Some(tail);
        Ok(self)
    }

    /// `A_N = N^{ν − kα/2} L(N)^{k/2}`.
    pub fn normalization(&self, n: usize) -> f64 {
        let nf = n as f64;
        let k = self.params.k as f64;
        nf.powf(self.nu as f64 - k * self.params.alpha / 2.0) * self.slow.eval(nf).powf(k / 2.0)
    }

    /// The functional actually summed: `H⁽⁰⁾`, plus `H⁽¹⁾` when present.
    pub fn full_functional(&self) -> ProductHermite<f64> {
        let mut out = self.h.as_product().clone();
        if let Some(t) = &self.tail {
            for (idx, c) in t.terms() {
                out.add_term(idx.clone(), *c).expect("tail shares the dimension");
            }
        }
        out
    }
}

/// `Y(p) = H(X(p))` over the block.
pub fn functional_field(h: &ProductHermite<f64>, sample: &FieldSample) -> Result<Vec<f64>> {
    if h.d() != sample.dims.d {
        return Err(Error::DimensionMismatch { expected: h.d(), got: sample.dims.d });
    }
    let mut x = vec![0.0; h.d()];
    (0..sample.points())
        .map(|p| {
            for (slot, col) in x.iter_mut().zip(&sample.values) {
                *slot = col[p];
            }
            h.eval(&x)
        })
        .collect()
}

/// Number of lattice points `0 ≤ p_l < N t_l` per axis.
fn rect_sides(n: usize, t: &[f64]) -> Result<Vec<usize>> {
    t.iter()
        .map(|&tl| {
            if !(0.0..=1.0).contains(&tl) {
                return Err(Error::InvalidParameter(format!("rectangle corner {tl} outside [0, 1]")));
            }
            Ok(((n as f64 * tl).ceil() as usize).min(n))
        })
        .collect()
}

pub fn normalized_sum(y: &[f64], n: usize, spec: &NormalizedSumSpec) -> f64 {
    y.iter().sum::<f64>() / spec.normalization(n)
}

/// Sum over `B_N(t) = {p : 0 ≤ p_l < N t_l}`, normalized as the full block.
pub fn normalized_sum_rect(y: &[f64], n: usize, t: &[f64], spec: &NormalizedSumSpec) -> Result<f64> {
    normalized_sum_nested(y, n, n, t, spec)
}

/// `S_N(t)` from the corner sub-block of a functional field sampled over
/// `[0, outer)^ν`; by stationarity it has the law of a fresh block of side `N`.
pub fn normalized_sum_nested(y: &[f64], outer: usize, n: usize, t: &[f64], spec: &NormalizedSumSpec) -> Result<f64> {
    if t.len() != spec.nu {
        return Err(Error::DimensionMismatch { expected: spec.nu, got: t.len() });
    }
    if n > outer || y.len() != outer.pow(spec.nu as u32) {
        return Err(Error::InvalidParameter(format!("block of side {n} does not fit a field of side {outer}")));
    }
    let sides = rect_sides(n, t)?;
    let count: usize = sides.iter().product();
    let mut acc = 0.0;
    for mut f in 0..count {
        let mut p = vec![0; spec.nu];
        for l in (0..spec.nu).rev() {
            p[l] = f % sides[l];
            f /= sides[l];
        }
        let flat = p.iter().fold(0, |acc, &pl| acc * outer + pl);
        acc += y[flat];
    }
    Ok(acc / spec.normalization(n))
}

fn check_diagonal(cov: &CovarianceTable) -> Result<()> {
    if !cov.is_diagonal(DIAGONAL_TOLERANCE) {
        return Err(Error::NonDiagonalModel("cross-covariances are nonzero".into()));
    }
    let origin = vec![0i64; cov.dims.nu];
    for j in 0..cov.dims.d {
        let v = cov.at(j, j, &origin);
        if (v - 1.0).abs() > UNIT_VARIANCE_TOLERANCE {
            return Err(Error::InvalidParameter(format!("coordinate {j} has variance {v}, expected 1")));
        }
    }
    Ok(())
}

/// Pulls rounding overshoot of a correlation back onto `[-1, 1]`.
fn clamp_unit(r: f64) -> f64 {
    if r.abs() > 1.0 && r.abs() <= 1.0 + UNIT_VARIANCE_TOLERANCE { r.signum() } else { r }
}

/// `Σ_{p ∈ R_a, q ∈ R_b} F(q − p)` for axis-aligned boxes anchored at the
/// origin with the given sides, grouped by lag.
fn lag_grouped<F>(cov: &CovarianceTable, a: &[usize], b: &[usize], f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let nu = cov.dims.nu;
    let d = cov.dims.d;
    let lo: Vec<i64> = a.iter().map(|&s| 1 - s as i64).collect();
    let hi: Vec<i64> = b.iter().map(|&s| s as i64 - 1).collect();
    let reach = lo.iter().chain(&hi).map(|v| v.unsigned_abs() as usize).max().unwrap_or(0);
    if reach > cov.max_lag {
        return Err(Error::TableRange { lag: vec![reach as i64], max_lag: cov.max_lag });
    }
    if a.contains(&0) || b.contains(&0) {
        return Ok(0.0);
    }
    let spans: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
    let total: usize = spans.iter().product();
    (0..total)
        .into_par_iter()
        .map(|mut flat| {
            let mut y = vec![0i64; nu];
            let mut count = 1.0;
            for l in (0..nu).rev() {
                y[l] = lo[l] + (flat % spans[l]) as i64;
                flat /= spans[l];
                // #{p < a_l, q < b_l : q − p = y_l}
                let start = 0.max(-y[l]);
                let end = (a[l] as i64).min(b[l] as i64 - y[l]);
                count *= (end - start).max(0) as f64;
            }
            if count == 0.0 {
                return Ok(0.0);
            }
            let r: Vec<f64> = (0..d).map(|j| clamp_unit(cov.at(j, j, &y))).collect();
            Ok(count * f(&r)?)
        })
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.into_iter().sum())
}

/// Exact `E[S_N(t_a) S_N(t_b)]` for the summed functional (tail included when
/// present) under a diagonal model.
pub fn exact_covariance_rect(
    spec: &NormalizedSumSpec,
    cov: &CovarianceTable,
    n: usize,
    ta: &[f64],
    tb: &[f64],
) -> Result<f64> {
    check_diagonal(cov)?;
    let (a, b) = (rect_sides(n, ta)?, rect_sides(n, tb)?);
    let h = spec.full_functional();
    let s = lag_grouped(cov, &a, &b, |r| h.cross_moment_diagonal(r))?;
    Ok(s / spec.normalization(n).powi(2))
}

/// Exact `E S_N²` over the full block.
pub fn exact_variance_sn(spec: &NormalizedSumSpec, cov: &CovarianceTable, n: usize) -> Result<f64> {
    let ones = vec![1.0; spec.nu];
    exact_covariance_rect(spec, cov, n, &ones, &ones)
}

/// Exact second moment of the tail part alone, normalized with the order-`k`
/// constant `A_N`.
pub fn tail_second_moment(spec: &NormalizedSumSpec, cov: &CovarianceTable, n: usize) -> Result<f64> {
    check_diagonal(cov)?;
    let Some(tail) = &spec.tail else {
        return Ok(0.0);
    };
    let sides = vec![n; spec.nu];
    let t = tail.as_product();
    let s = lag_grouped(cov, &sides, &sides, |r| t.cross_moment_diagonal(r))?;
    Ok(s / spec.normalization(n).powi(2))
}

/// One row per replicate: `S_N(t_1), …, S_N(t_K)` from fresh field samples.
pub fn sample_normalized_sums(
    sampler: &FieldSampler,
    spec: &NormalizedSumSpec,
    n: usize,
    ts: &[Vec<f64>],
    seed: u64,
    replicates: u64,
) -> Result<Vec<Vec<f64>>> {
    let h = spec.full_functional();
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let y = functional_field(&h, &sampler.sample(seed, r))?;
            ts.iter().map(|t| normalized_sum_rect(&y, n, t, spec)).collect()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceRow {
    pub n: usize,
    pub variance: f64,
    pub relative_change: Option<f64>,
}

/// Exact variances along a sequence of block sizes with successive relative
/// changes.
pub fn variance_sequence(spec: &NormalizedSumSpec, cov: &CovarianceTable, ns: &[usize]) -> Result<Vec<VarianceRow>> {
    let mut out: Vec<VarianceRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        let v = exact_variance_sn(spec, cov, n)?;
        let relative_change = out.last().map(|prev| (v - prev.variance).abs() / prev.variance.abs());
        out.push(VarianceRow { n, variance: v, relative_change });
    }
    Ok(out)
}
