//! Quadratic-form measures, the tightness measures built from `|h_N|²`, their
//! lattice Fourier transforms and test-function integrals.

use super::{LimitSpectralModel, MatrixSpectralMeasureOnGrid};
use crate::error::{Error, Result};
use crate::fft::convolve_many;
use crate::linalg::CMatrix;
use crate::lrd_model::{cell_rule, CovarianceTable, LatticeDims, SlowVarying, SpectralDensity, SpectralDensityModel};
use crate::wiener_ito::lattice_factor;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Per-cell `(R(Δ), S(Δ))` for the pair `(j, j')`.
pub fn quadratic_form_measures(
    g: &MatrixSpectralMeasureOnGrid,
    j: usize,
    jp: usize,
) -> Result<Vec<(f64, f64)>> {
    if j == jp || j >= g.d || jp >= g.d {
        return Err(Error::InvalidParameter(format!("need distinct indices below d, got ({j}, {jp})")));
    }
    let i = Complex64::new(0.0, 1.0);
    g.masses
        .iter()
        .map(|m| {
            let diag = m[(j, j)] + m[(jp, jp)];
            let r = diag + m[(j, jp)] + m[(jp, j)];
            let s = diag - i * (m[(j, jp)] - m[(jp, j)]);
            for v in [r.re, s.re] {
                if v < -1e-12 {
                    return Err(Error::NotPositiveSemidefinite { min_eigenvalue: v });
                }
            }
            Ok((r.re, s.re))
        })
        .collect()
}

const MIDPOINT_LIMIT: usize = 3;

/// `μ^N(R^{kν} \ [-T, T]^{kν})` by midpoint quadrature over the product of
/// diagonal measures; `h` receives the `k` flattened cell centers.
pub fn rescaled_tail_mass(
    h: &dyn Fn(&[f64]) -> Complex64,
    gn: &MatrixSpectralMeasureOnGrid,
    indices: &[usize],
    t: f64,
) -> Result<f64> {
    let (k, nu) = (indices.len(), gn.grid.nu);
    if k * nu > MIDPOINT_LIMIT {
        return Err(Error::Dimensionality { dim: k * nu, limit: MIDPOINT_LIMIT });
    }
    let cells = gn.grid.count();
    let centers: Vec<Vec<f64>> = (0..cells).map(|f| gn.grid.center(f)).collect();
    let diags: Vec<Vec<f64>> = indices.iter().map(|&j| gn.diagonal(j)).collect();
    let mut acc = 0.0;
    let mut x = vec![0.0; k * nu];
    for mut flat in 0..cells.pow(k as u32) {
        let mut weight = 1.0;
        let mut outside = false;
        for s in 0..k {
            let c = flat % cells;
            flat /= cells;
            weight *= diags[s][c];
            for l in 0..nu {
                x[s * nu + l] = centers[c][l];
                outside |= centers[c][l].abs() > t;
            }
        }
        if outside && weight != 0.0 {
            acc += h(&x).norm_sqr() * weight;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailProfile {
    pub n: u64,
    pub total: f64,
    pub thresholds: Vec<f64>,
    pub tails: Vec<f64>,
}

fn sum_centers(gn: &MatrixSpectralMeasureOnGrid, k: usize, len: usize) -> Vec<f64> {
    let w = gn.grid.width();
    let b = gn.grid.half_width;
    (0..len).map(|m| -(k as f64) * b + (m as f64 + 0.5 * k as f64) * w).collect()
}

/// Total `μ^N` mass and tail masses beyond each threshold for `ν = 1`,
/// using that `h_N` depends only on the argument sum.
pub fn rescaled_tail_profile(
    n: u64,
    gn: &MatrixSpectralMeasureOnGrid,
    indices: &[usize],
    thresholds: &[f64],
) -> Result<TailProfile> {
    if gn.grid.nu != 1 {
        return Err(Error::Dimensionality { dim: gn.grid.nu, limit: 1 });
    }
    let k = indices.len();
    let masked = |t: f64| -> Vec<Vec<Complex64>> {
        indices
            .iter()
            .map(|&j| {
                gn.diagonal(j)
                    .iter()
                    .enumerate()
                    .map(|(c, &v)| {
                        let x = gn.grid.center(c)[0];
                        Complex64::new(if x.abs() <= t { v } else { 0.0 }, 0.0)
                    })
                    .collect()
            })
            .collect()
    };
    let weigh = |seqs: Vec<Vec<Complex64>>| -> f64 {
        let refs: Vec<&[Complex64]> = seqs.iter().map(|s| s.as_slice()).collect();
        let conv = convolve_many(&refs);
        let s = sum_centers(gn, k, conv.len());
        conv.iter().zip(&s).map(|(c, &x)| c.re * lattice_factor(x, n).norm_sqr()).sum()
    };
    let total = weigh(masked(f64::INFINITY));
    let tails = thresholds.iter().map(|&t| (total - weigh(masked(t))).max(0.0)).collect();
    Ok(TailProfile { n, total, thresholds: thresholds.to_vec(), tails })
}

/// `φ^N(p_1/N, …, p_k/N)` from covariances:
/// `N^{-(2ν−kα)} L(N)^{-k} Σ_y Π_l (N − |y_l|) Π_s r_{j_s,j_s}(y + p_s)`.
pub fn lattice_transform(
    cov: &CovarianceTable,
    indices: &[usize],
    lags: &[Vec<i64>],
    n: u64,
    alpha: f64,
    slow: SlowVarying,
) -> Result<Complex64> {
    let LatticeDims { nu, .. } = cov.dims;
    if lags.len() != indices.len() {
        return Err(Error::DimensionMismatch { expected: indices.len(), got: lags.len() });
    }
    let ni = n as i64;
    let reach = lags.iter().flatten().map(|p| p.abs()).max().unwrap_or(0) + ni - 1;
    if reach > cov.max_lag as i64 {
        return Err(Error::TableRange { lag: vec![reach], max_lag: cov.max_lag });
    }
    let side = (2 * ni - 1) as usize;
    let mut acc = 0.0;
    let mut y = vec![0i64; nu];
    let mut shifted = vec![0i64; nu];
    for mut flat in 0..side.pow(nu as u32) {
        let mut count = 1.0;
        for slot in y.iter_mut() {
            *slot = (flat % side) as i64 - (ni - 1);
            flat /= side;
            count *= (ni - slot.abs()) as f64;
        }
        let mut prod = count;
        for (&j, p) in indices.iter().zip(lags) {
            for l in 0..nu {
                shifted[l] = y[l] + p[l];
            }
            prod *= cov.at(j, j, &shifted);
        }
        acc += prod;
    }
    let nf = n as f64;
    let k = indices.len() as f64;
    let norm = nf.powf(-(2.0 * nu as f64 - k * alpha)) * slow.eval(nf).powf(-k);
    Ok(Complex64::new(acc * norm, 0.0))
}

/// Midpoint-quadrature transform `∫ e^{i Σ p_s x_s / N} μ^N(dx)` for `ν = 1`.
pub fn measure_transform(
    gn: &MatrixSpectralMeasureOnGrid,
    indices: &[usize],
    lags: &[i64],
    n: u64,
) -> Result<Complex64> {
    if gn.grid.nu != 1 {
        return Err(Error::Dimensionality { dim: gn.grid.nu, limit: 1 });
    }
    if lags.len() != indices.len() {
        return Err(Error::DimensionMismatch { expected: indices.len(), got: lags.len() });
    }
    let nf = n as f64;
    let seqs: Vec<Vec<Complex64>> = indices
        .iter()
        .zip(lags)
        .map(|(&j, &p)| {
            gn.diagonal(j)
                .iter()
                .enumerate()
                .map(|(c, &v)| Complex64::from_polar(v, p as f64 * gn.grid.center(c)[0] / nf))
                .collect()
        })
        .collect();
    let refs: Vec<&[Complex64]> = seqs.iter().map(|s| s.as_slice()).collect();
    let conv = convolve_many(&refs);
    let s = sum_centers(gn, indices.len(), conv.len());
    Ok(conv.iter().zip(&s).map(|(c, &x)| c * lattice_factor(x, n).norm_sqr()).sum())
}

/// `∫ e^{i Σ p_s x_s / N} μ^N(dx)` for `ν = 1` from a density on the torus.
///
/// Each factor integrates `e^{i p_s u} g_{j_s j_s}(u)` exactly over `cells`
/// cells of `[-π, π)`, so only `|h_N|²` is evaluated at cell-center sums.
pub fn measure_transform_exact_cells(
    density: &dyn SpectralDensity,
    slow: SlowVarying,
    alpha: f64,
    indices: &[usize],
    lags: &[i64],
    n: u64,
    cells: usize,
) -> Result<Complex64> {
    if density.dims().nu != 1 {
        return Err(Error::Dimensionality { dim: density.dims().nu, limit: 1 });
    }
    if lags.len() != indices.len() {
        return Err(Error::DimensionMismatch { expected: indices.len(), got: lags.len() });
    }
    let w = 2.0 * PI / cells as f64;
    let beta = density.radial_exponent();
    let rules: Vec<Vec<(Vec<f64>, f64, CMatrix)>> = (0..cells)
        .map(|c| {
            let lo = (c as f64 - cells as f64 / 2.0) * w;
            Ok(cell_rule(beta, &[lo], &[lo + w], FOURIER_NODES)?
                .into_iter()
                .map(|(u, wt)| {
                    let f = density.factor(&u);
                    (u, wt, f)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let nf = n as f64;
    let scale = nf.powf(alpha) / slow.eval(nf);
    let seqs: Vec<Vec<Complex64>> = indices
        .iter()
        .zip(lags)
        .map(|(&j, &p)| {
            rules
                .iter()
                .map(|rule| {
                    rule.iter()
                        .map(|(u, wt, f)| f[(j, j)] * Complex64::from_polar(*wt, p as f64 * u[0]))
                        .sum::<Complex64>()
                        * scale
                })
                .collect()
        })
        .collect();
    let refs: Vec<&[Complex64]> = seqs.iter().map(|s| s.as_slice()).collect();
    let conv = convolve_many(&refs);
    let k = indices.len() as f64;
    let wx = w * nf;
    Ok(conv
        .iter()
        .enumerate()
        .map(|(m, c)| c * lattice_factor(-k * nf * PI + (m as f64 + 0.5 * k) * wx, n).norm_sqr())
        .sum())
}

const FOURIER_NODES: usize = 4;

/// Tensor-product bump `Π_l cos²(π (x_l − c_l) / (2w))` on `|x_l − c_l| < w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub half_width: f64,
}

impl Bump {
    pub fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(v, c)| {
                let z = (v - c) / self.half_width;
                if z.abs() >= 1.0 {
                    0.0
                } else {
                    (std::f64::consts::FRAC_PI_2 * z).cos().powi(2)
                }
            })
            .product()
    }

    /// The fixed battery used by the diagnostics.
    pub fn battery(nu: usize) -> Vec<Bump> {
        let mut out = Vec::new();
        for (c, w) in [(0.0, 1.0), (1.5, 1.0), (-2.5, 0.75), (0.5, 2.0)] {
            let mut center = vec![0.0; nu];
            center[0] = c;
            out.push(Bump { center, half_width: w });
        }
        out
    }
}

const BUMP_PIECES: usize = 16;
const BUMP_NODES: usize = 12;

fn integrate_bump(density: &dyn SpectralDensity, bump: &Bump) -> Result<CMatrix> {
    let nu = bump.center.len();
    let d = density.dims().d;
    let beta = density.radial_exponent();
    let mut acc = CMatrix::zeros(d, d);
    let w = 2.0 * bump.half_width / BUMP_PIECES as f64;
    for mut flat in 0..BUMP_PIECES.pow(nu as u32) {
        let mut lo = vec![0.0; nu];
        let mut hi = vec![0.0; nu];
        for l in 0..nu {
            let i = flat % BUMP_PIECES;
            flat /= BUMP_PIECES;
            lo[l] = bump.center[l] - bump.half_width + i as f64 * w;
            hi[l] = lo[l] + w;
        }
        for (x, wt) in cell_rule(beta, &lo, &hi, BUMP_NODES)? {
            let f = bump.value(&x);
            if f != 0.0 {
                acc += density.factor(&x) * Complex64::new(wt * f, 0.0);
            }
        }
    }
    Ok(acc)
}

/// The model density after `x ↦ x/N`, with the rescaling prefactor folded in
/// so that `∫ f dG^N = L(N)^{-1} ∫ f(x) |x|^{α−ν} b(x/|x|) h(x/N) dx`.
struct RescaledDensity<'a> {
    model: &'a SpectralDensityModel,
    n: f64,
}

impl SpectralDensity for RescaledDensity<'_> {
    fn dims(&self) -> LatticeDims {
        self.model.dims
    }

    fn radial_exponent(&self) -> f64 {
        self.model.radial_exponent()
    }

    fn factor(&self, u: &[f64]) -> CMatrix {
        let v: Vec<f64> = u.iter().map(|x| x / self.n).collect();
        self.model.factor(&v)
    }
}

/// `∫ f dG^N` for a bump supported inside `[-Nπ, Nπ)^ν`.
pub fn bump_integral_rescaled(
    model: &SpectralDensityModel,
    slow: SlowVarying,
    bump: &Bump,
    n: u64,
) -> Result<CMatrix> {
    let nf = n as f64;
    let reach = bump.center.iter().map(|c| c.abs()).fold(0.0, f64::max) + bump.half_width;
    if reach > nf * std::f64::consts::PI {
        return Err(Error::TorusDomain { value: reach, bound: nf * std::f64::consts::PI });
    }
    let m = integrate_bump(&RescaledDensity { model, n: nf }, bump)?;
    Ok(m / Complex64::new(slow.eval(nf), 0.0))
}

pub fn bump_integral_limit(limit: &LimitSpectralModel, bump: &Bump) -> Result<CMatrix> {
    integrate_bump(limit, bump)
}
