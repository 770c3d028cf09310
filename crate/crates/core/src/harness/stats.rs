//! Two-sample comparisons: Kolmogorov–Smirnov, moments, characteristic functions.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `sup_x |F̂_a(x) − F̂_b(x)|` over the pooled sample points.
pub fn ks_distance(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (a, b) = (sorted(sample_a), sorted(sample_b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = if a[i].total_cmp(&b[j]).is_le() { a[i] } else { b[j] };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample critical value `c(level) √((n + m)/(n m))` with
/// `c(level) = √(−ln(level/2)/2)`.
pub fn ks_critical_value(n: usize, m: usize, level: f64) -> f64 {
    let c = (-(level / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Raw moment of order `r` with the standard error of its sample mean.
fn raw_moment(x: &[f64], r: i32) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().map(|v| v.powi(r)).sum::<f64>() / n;
    let var = x.iter().map(|v| (v.powi(r) - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub order: u32,
    pub a: f64,
    pub a_se: f64,
    pub b: f64,
    pub b_se: f64,
    /// `(a − b) / √(a_se² + b_se²)`; zero when both errors vanish.
    pub z: f64,
}

/// First four raw moments of two samples with paired z-scores.
pub fn moment_table(sample_a: &[f64], sample_b: &[f64]) -> Result<Vec<MomentRow>> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(Error::InsufficientReplicates { needed: 2, got: sample_a.len().min(sample_b.len()) });
    }
    Ok((1..=4)
        .map(|order| {
            let (a, a_se) = raw_moment(sample_a, order as i32);
            let (b, b_se) = raw_moment(sample_b, order as i32);
            let se = a_se.hypot(b_se);
            let z = if se > 0.0 { (a - b) / se } else { 0.0 };
            MomentRow { order, a, a_se, b, b_se, z }
        })
        .collect())
}

/// Sample variance with the delta-method standard error `√((m₄ − s⁴)/n)`.
pub fn variance_with_se(x: &[f64]) -> Result<(f64, f64)> {
    if x.len() < 2 {
        return Err(Error::InsufficientReplicates { needed: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    Ok((var, ((m4 - var * var).max(0.0) / n).sqrt()))
}

/// Sample covariance matrix of the columns of `rows`.
pub fn sample_covariance(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if rows.len() < 2 {
        return Err(Error::InsufficientReplicates { needed: 2, got: rows.len() });
    }
    let k = rows[0].len();
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..k).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n).collect();
    Ok((0..k)
        .map(|a| {
            (0..k)
                .map(|b| rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1.0))
                .collect()
        })
        .collect())
}

pub fn empirical_char_fn(x: &[f64], u: f64) -> Complex64 {
    let s: Complex64 = x.iter().map(|v| Complex64::from_polar(1.0, u * v)).sum();
    s / x.len() as f64
}

/// `max_u |φ̂_a(u) − φ̂_b(u)|` over `grid`.
pub fn char_fn_distance(sample_a: &[f64], sample_b: &[f64], grid: &[f64]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(grid
        .iter()
        .map(|&u| (empirical_char_fn(sample_a, u) - empirical_char_fn(sample_b, u)).norm())
        .fold(0.0, f64::max))
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}
