//! Checks of the asymptotic covariance condition and fits of its angular part.

use super::{AngularFunction, AngularKernel, CovarianceTable, LongRangeParams, SlowVarying};
use crate::error::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub thresholds: Vec<f64>,
    /// Sup relative error over `|p| ≥ T` for each threshold.
    pub sup_errors: Vec<f64>,
}

impl ConditionReport {
    pub fn is_decreasing(&self) -> bool {
        self.sup_errors.windows(2).all(|w| w[1] < w[0])
    }
}

fn norm(lag: &[i64]) -> f64 {
    (lag.iter().map(|p| p * p).sum::<i64>() as f64).sqrt()
}

pub fn verify_lrd_condition(
    table: &CovarianceTable,
    params: &LongRangeParams,
    slow: SlowVarying,
    a: &AngularKernel,
    thresholds: &[f64],
) -> Result<ConditionReport> {
    let top = thresholds.iter().cloned().fold(0.0, f64::max);
    if (table.max_lag as f64) < top {
        return Err(Error::TableRange { lag: vec![top.ceil() as i64], max_lag: table.max_lag });
    }
    let d = table.dims.d;
    // error at every lag once, then suprema over the tails
    let mut per_lag: Vec<(f64, f64)> = Vec::new();
    for lag in table.lags() {
        let n = norm(&lag);
        if n == 0.0 || n < thresholds.iter().cloned().fold(f64::INFINITY, f64::min) {
            continue;
        }
        let theta: Vec<f64> = lag.iter().map(|&p| p as f64 / n).collect();
        let scale = n.powf(-params.alpha) * slow.eval(n);
        let mut worst: f64 = 0.0;
        for j in 0..d {
            for jp in 0..d {
                let dev = (table.at(j, jp, &lag) - a.eval(j, jp, &theta) * scale).abs() / scale;
                worst = worst.max(dev);
            }
        }
        per_lag.push((n, worst));
    }
    let sup_errors = thresholds
        .iter()
        .map(|&t| per_lag.iter().filter(|(n, _)| *n >= t).map(|x| x.1).fold(0.0, f64::max))
        .collect();
    Ok(ConditionReport { thresholds: thresholds.to_vec(), sup_errors })
}

/// Fits `a_{j,j'}(θ)` as the mean of `r_{j,j'}(p) |p|^α / L(|p|)` over the
/// listed lags on each ray, then symmetrizes.
pub fn estimate_angular(
    table: &CovarianceTable,
    params: &LongRangeParams,
    slow: SlowVarying,
    ray_lags: &[Vec<i64>],
    rel_tolerance: f64,
) -> Result<AngularKernel> {
    let (nu, d) = (table.dims.nu, table.dims.d);
    let key = |dir: &[f64]| -> Vec<i64> { dir.iter().map(|v| (v * 1e9).round() as i64).collect() };
    let mut rays: BTreeMap<Vec<i64>, (Vec<f64>, Vec<Vec<f64>>)> = BTreeMap::new();
    for lag in ray_lags {
        if lag.len() != nu {
            return Err(Error::DimensionMismatch { expected: nu, got: lag.len() });
        }
        let n = norm(lag);
        if n == 0.0 {
            return Err(Error::InvalidParameter("ray lag at the origin".into()));
        }
        let dir: Vec<f64> = lag.iter().map(|&p| p as f64 / n).collect();
        let scale = n.powf(params.alpha) / slow.eval(n);
        let mut est = Vec::with_capacity(d * d);
        for j in 0..d {
            for jp in 0..d {
                est.push(table.get(j, jp, lag)? * scale);
            }
        }
        rays.entry(key(&dir)).or_insert_with(|| (dir, Vec::new())).1.push(est);
    }
    if rays.is_empty() {
        return Err(Error::InvalidParameter("no ray lags supplied".into()));
    }

    let mut means: BTreeMap<Vec<i64>, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (k, (dir, ests)) in &rays {
        let mut mean = vec![0.0; d * d];
        for e in 0..d * d {
            let vals: Vec<f64> = ests.iter().map(|v| v[e]).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
            let spread = (hi - lo) / m.abs().max(1e-10);
            if spread > rel_tolerance {
                return Err(Error::Instability { direction: format!("{dir:?}"), spread });
            }
            mean[e] = m;
        }
        means.insert(k.clone(), (dir.clone(), mean));
    }

    // a_{j',j}(θ) and a_{j,j'}(-θ) describe the same quantity
    let mut sym: BTreeMap<Vec<i64>, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (k, (dir, mean)) in &means {
        let nk: Vec<i64> = k.iter().map(|v| -v).collect();
        let mut out = mean.clone();
        if let Some((_, other)) = means.get(&nk) {
            for j in 0..d {
                for jp in 0..d {
                    out[j * d + jp] = 0.5 * (mean[j * d + jp] + other[jp * d + j]);
                }
            }
        }
        sym.insert(k.clone(), (dir.clone(), out));
    }

    let entries = (0..d * d)
        .map(|e| {
            if nu == 1 {
                let pick = |s: f64| {
                    sym.values()
                        .find(|(dir, _)| dir[0] * s > 0.0)
                        .or_else(|| sym.values().next())
                        .map(|(_, m)| m[e])
                        .unwrap()
                };
                let (j, jp) = (e / d, e % d);
                let plus = pick(1.0);
                // a_{j,j'}(-1) = a_{j',j}(+1) when the negative ray is absent
                let minus = if sym.values().any(|(dir, _)| dir[0] < 0.0) {
                    pick(-1.0)
                } else {
                    sym.values().next().map(|(_, m)| m[jp * d + j]).unwrap()
                };
                AngularFunction::Signed { plus, minus }
            } else {
                AngularFunction::Directions(sym.values().map(|(dir, m)| (dir.clone(), m[e])).collect())
            }
        })
        .collect();
    AngularKernel::new(table.dims, entries)
}
