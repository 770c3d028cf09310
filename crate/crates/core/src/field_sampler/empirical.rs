//! Cross-replicate covariance estimates with standard errors.

use super::FieldSample;
use crate::error::{Error, Result};
use crate::lrd_model::{CovarianceTable, LatticeDims};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCovariance {
    pub estimate: CovarianceTable,
    pub std_error: CovarianceTable,
    pub replicates: usize,
}

/// Running sums of per-replicate lag averages.
#[derive(Debug, Clone)]
pub struct CovarianceAccumulator {
    dims: LatticeDims,
    n: usize,
    max_lag: usize,
    lags: Vec<Vec<i64>>,
    count: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl CovarianceAccumulator {
    pub fn new(dims: LatticeDims, n: usize, max_lag: usize) -> Result<Self> {
        if max_lag >= n {
            return Err(Error::InvalidParameter(format!("max lag {max_lag} must be below N = {n}")));
        }
        let lags: Vec<Vec<i64>> = CovarianceTable::zeros(dims, max_lag).lags().collect();
        let size = lags.len() * dims.d * dims.d;
        Ok(Self { dims, n, max_lag, lags, count: 0, sum: vec![0.0; size], sum_sq: vec![0.0; size] })
    }

    pub fn add(&mut self, s: &FieldSample) -> Result<()> {
        if s.dims != self.dims || s.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: s.n });
        }
        let LatticeDims { nu, d } = self.dims;
        let n = self.n as i64;
        let mut e = 0;
        let mut q = vec![0i64; nu];
        for lag in &self.lags {
            let ranges: Vec<(i64, i64)> = lag.iter().map(|&l| (0.max(-l), n.min(n - l))).collect();
            let spans: Vec<usize> = ranges.iter().map(|(a, b)| (b - a) as usize).collect();
            let count: usize = spans.iter().product();
            for j in 0..d {
                for jp in 0..d {
                    let mut acc = 0.0;
                    for mut f in 0..count {
                        for l in (0..nu).rev() {
                            q[l] = ranges[l].0 + (f % spans[l]) as i64;
                            f /= spans[l];
                        }
                        let a = q.iter().fold(0i64, |acc, &v| acc * n + v) as usize;
                        let b = q.iter().zip(lag).fold(0i64, |acc, (&v, &l)| acc * n + v + l) as usize;
                        acc += s.values[j][a] * s.values[jp][b];
                    }
                    let v = acc / count as f64;
                    self.sum[e] += v;
                    self.sum_sq[e] += v * v;
                    e += 1;
                }
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self) -> Result<EmpiricalCovariance> {
        if self.count < 2 {
            return Err(Error::InsufficientReplicates { needed: 2, got: self.count });
        }
        let m = self.count as f64;
        let d = self.dims.d;
        let index = |lag: &[i64], j: usize, jp: usize| {
            let side = 2 * self.max_lag as i64 + 1;
            let f = lag.iter().fold(0i64, |a, &l| a * side + l + self.max_lag as i64) as usize;
            (f * d + j) * d + jp
        };
        let estimate = CovarianceTable::from_fn(self.dims, self.max_lag, |lag, j, jp| self.sum[index(lag, j, jp)] / m);
        let std_error = CovarianceTable::from_fn(self.dims, self.max_lag, |lag, j, jp| {
            let e = index(lag, j, jp);
            let mean = self.sum[e] / m;
            let var = ((self.sum_sq[e] - m * mean * mean) / (m - 1.0)).max(0.0);
            (var / m).sqrt()
        });
        Ok(EmpiricalCovariance { estimate, std_error, replicates: self.count })
    }
}

pub fn empirical_covariance(samples: &[FieldSample], max_lag: usize) -> Result<EmpiricalCovariance> {
    let first = samples.first().ok_or(Error::InsufficientReplicates { needed: 2, got: 0 })?;
    let proto = CovarianceAccumulator::new(first.dims, first.n, max_lag)?;
    let acc = samples
        .par_chunks(64)
        .map(|chunk| {
            let mut a = proto.clone();
            for s in chunk {
                a.add(s)?;
            }
            Ok(a)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(proto.clone(), |mut a, b| {
            a.merge(&b);
            a
        });
    acc.finish()
}

/// Fraction of entries with `|estimate − target| ≤ z · se`.
pub fn coverage(emp: &EmpiricalCovariance, target: &CovarianceTable, z: f64) -> Result<f64> {
    let d = emp.estimate.dims.d;
    let mut hit = 0usize;
    let mut total = 0usize;
    for lag in emp.estimate.lags() {
        for j in 0..d {
            for jp in 0..d {
                let t = target.get(j, jp, &lag)?;
                let (e, se) = (emp.estimate.at(j, jp, &lag), emp.std_error.at(j, jp, &lag));
                total += 1;
                if (e - t).abs() <= z * se {
                    hit += 1;
                }
            }
        }
    }
    Ok(hit as f64 / total as f64)
}
