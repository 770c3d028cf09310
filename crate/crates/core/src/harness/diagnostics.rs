//! Spectral diagnostics: vague convergence, homogeneity, tightness and the
//! lattice transforms of the tightness measures.

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::lrd_model::{FieldModel, SpectralDensityModel};
use crate::spectral_measure::{
    bump_integral_limit, bump_integral_rescaled, rescaled_tail_profile, measure_transform_exact_cells, lattice_transform,
    quadratic_form_measures, rescale_measure, Bump, CellGrid, LimitSpectralModel, MatrixSpectralMeasureOnGrid,
    TailProfile,
};
use serde::Serialize;

const MEASURE_NODES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpRow {
    pub config_hash: String,
    pub bump: usize,
    pub n: u64,
    /// Largest entrywise `|∫f dG^N − ∫f dG⁰|`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiRow {
    pub config_hash: String,
    pub n: u64,
    pub lags: Vec<i64>,
    pub lattice: f64,
    pub quadrature: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub config_hash: String,
    pub homogeneity_residual: f64,
    pub bumps: Vec<BumpRow>,
    /// One flag per bump: errors strictly decrease along `bump_ns`.
    pub bumps_decreasing: Vec<bool>,
    /// Smallest `R` or `S` cell mass over all index pairs; `None` for `d = 1`.
    pub min_quadratic_form: Option<f64>,
    pub tails: Vec<TailProfile>,
    /// Smallest threshold from which every tail fraction stays below the
    /// configured bound, uniformly in `N`.
    pub tail_threshold: Option<f64>,
    pub phi: Vec<PhiRow>,
    pub max_phi_relative_error: f64,
}

/// Rectangles on which homogeneity of the limit measure is checked.
pub fn rectangle_battery(nu: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let one = [(0.5, 2.0), (-3.0, -1.0), (-1.0, 2.0), (1.0, 7.5)];
    match nu {
        1 => one.iter().map(|&(a, b)| (vec![a], vec![b])).collect(),
        _ => one
            .iter()
            .zip(one.iter().rev())
            .map(|(&(a, b), &(c, d))| {
                let lo: Vec<f64> = (0..nu).map(|l| if l % 2 == 0 { a } else { c }).collect();
                let hi: Vec<f64> = (0..nu).map(|l| if l % 2 == 0 { b } else { d }).collect();
                (lo, hi)
            })
            .collect(),
    }
}

fn density_model(model: &FieldModel) -> Result<&SpectralDensityModel> {
    match model {
        FieldModel::Density { model, .. } => Ok(model),
        FieldModel::PowerLaw { .. } => {
            Err(Error::Config("spectral diagnostics need a density model (model.kind = \"density\")".into()))
        }
    }
}

pub fn run_diagnostics(cfg: &ExperimentConfig) -> Result<DiagnosticsReport> {
    cfg.validate()?;
    let diag = &cfg.diagnostics;
    let hash = cfg.hash();
    let model = cfg.model.build()?;
    let density = density_model(&model)?;
    let limit = LimitSpectralModel::from_field_model(&model)?;
    let (nu, d, k) = (cfg.model.nu, cfg.model.d, cfg.model.k);
    let slow = model.slow();

    let mut homogeneity_residual: f64 = 0.0;
    for (lo, hi) in rectangle_battery(nu) {
        for &t in &diag.homogeneity_scales {
            homogeneity_residual = homogeneity_residual.max(limit.homogeneity_residual(&lo, &hi, t)?);
        }
    }

    let battery = Bump::battery(nu);
    let mut bumps = Vec::new();
    let mut bumps_decreasing = Vec::new();
    for (i, bump) in battery.iter().enumerate() {
        let target = bump_integral_limit(&limit, bump)?;
        let mut errs = Vec::new();
        for &n in &diag.bump_ns {
            let diff = bump_integral_rescaled(density, slow, bump, n)? - &target;
            let error = diff.iter().map(|z| z.norm()).fold(0.0, f64::max);
            errs.push(error);
            bumps.push(BumpRow { config_hash: hash.clone(), bump: i, n, error });
        }
        bumps_decreasing.push(errs.windows(2).all(|w| w[1] < w[0]));
    }

    let cells = if nu == 1 { diag.cells } else { diag.cells.min(64) };
    let torus = MatrixSpectralMeasureOnGrid::from_density(density, CellGrid::torus(nu, 1, cells)?, MEASURE_NODES)?;
    let min_quadratic_form = if d >= 2 {
        let mut m = f64::INFINITY;
        for j in 0..d {
            for jp in (j + 1)..d {
                for (r, s) in quadratic_form_measures(&torus, j, jp)? {
                    m = m.min(r).min(s);
                }
            }
        }
        Some(m)
    } else {
        None
    };

    let indices = vec![0usize; k];
    let (mut tails, mut phi) = (Vec::new(), Vec::new());
    let mut tail_threshold = None;
    if nu == 1 {
        for &n in &diag.tail_ns {
            let gn = rescale_measure(&torus, n, slow, cfg.model.alpha)?;
            tails.push(rescaled_tail_profile(n, &gn, &indices, &diag.tail_thresholds)?);
        }
        tail_threshold = diag.tail_thresholds.iter().enumerate().find_map(|(i, &t)| {
            let ok = tails.iter().all(|p| p.tails[i..].iter().all(|&m| m < diag.tail_fraction * p.total));
            ok.then_some(t)
        });

        let n = diag.phi_n;
        let reach = diag.phi_points.iter().flatten().map(|p| p.unsigned_abs()).max().unwrap_or(0);
        let cov = model.covariance(n as usize + reach as usize)?;
        let fine = (256 * n as usize).next_power_of_two().max(diag.cells);
        for lags in &diag.phi_points {
            if lags.len() != k {
                return Err(Error::Config(format!("diagnostics.phi_points entry {lags:?} needs {k} lags")));
            }
            let lattice_lags: Vec<Vec<i64>> = lags.iter().map(|&p| vec![p]).collect();
            let lattice = lattice_transform(&cov, &indices, &lattice_lags, n, cfg.model.alpha, slow)?;
            let quad = measure_transform_exact_cells(density, slow, cfg.model.alpha, &indices, lags, n, fine)?;
            phi.push(PhiRow {
                config_hash: hash.clone(),
                n,
                lags: lags.clone(),
                lattice: lattice.re,
                quadrature: quad.re,
                relative_error: (lattice - quad).norm() / lattice.norm(),
            });
        }
    }
    let max_phi_relative_error = phi.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    Ok(DiagnosticsReport {
        config_hash: hash,
        homogeneity_residual,
        bumps,
        bumps_decreasing,
        min_quadratic_form,
        tails,
        tail_threshold,
        phi,
        max_phi_relative_error,
    })
}
