//! Model definitions loaded from TOML.

use super::covariance::{covariance_table, CovarianceTable, PowerLawCovariance};
use super::density::{AngularFactor, SmoothFactor, SpectralDensityModel};
use super::{LatticeDims, LongRangeParams, SlowVarying};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Covariances computed from a spectral density.
    #[default]
    Density,
    /// Diagonal lattice power law `a_j |p|^{-α}`.
    PowerLaw,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlowSpec {
    #[serde(default)]
    pub kind: SlowVarying,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngularSpec {
    /// `identity`, `constant`, `signed` or `harmonic`.
    #[serde(default = "identity_kind")]
    pub kind: String,
    /// Real part of a constant matrix.
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Imaginary part of a constant matrix.
    pub matrix_im: Option<Vec<Vec<f64>>>,
    /// Matrices on the positive and negative half-lines (`ν = 1`).
    pub plus: Option<Vec<Vec<f64>>>,
    pub minus: Option<Vec<Vec<f64>>>,
    /// Diagonal `mean + amplitude · cos(order · φ)` (`ν = 2`).
    pub mean: Option<f64>,
    pub amplitude: Option<f64>,
    pub order: Option<u32>,
}

fn identity_kind() -> String {
    "identity".into()
}

impl Default for AngularSpec {
    fn default() -> Self {
        Self {
            kind: identity_kind(),
            matrix: None,
            matrix_im: None,
            plus: None,
            minus: None,
            mean: None,
            amplitude: None,
            order: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothSpec {
    /// `constant` or `raised_cosine`.
    #[serde(default = "raised_cosine_kind")]
    pub kind: String,
    #[serde(default = "one")]
    pub value: f64,
}

fn raised_cosine_kind() -> String {
    "raised_cosine".into()
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl Default for SmoothSpec {
    fn default() -> Self {
        Self { kind: raised_cosine_kind(), value: 1.0 }
    }
}

/// The `[model]` block of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub nu: usize,
    pub d: usize,
    pub alpha: f64,
    pub k: usize,
    #[serde(default)]
    pub kind: ModelKind,
    #[serde(default, rename = "L")]
    pub slow: SlowSpec,
    #[serde(default)]
    pub b: AngularSpec,
    #[serde(default)]
    pub h: SmoothSpec,
    /// Power-law amplitudes; omitted means the balanced amplitude.
    pub amplitude: Option<Vec<f64>>,
    /// Rescale density models to unit coordinate variances.
    #[serde(default = "yes")]
    pub normalize: bool,
    /// Quadrature cells per axis for density models.
    pub resolution: Option<usize>,
}

/// A built model: either covariance source.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldModel {
    Density { model: SpectralDensityModel, slow: SlowVarying, resolution: Option<usize> },
    PowerLaw { model: PowerLawCovariance, params: LongRangeParams, slow: SlowVarying },
}

fn real_matrix(name: &str, m: &Option<Vec<Vec<f64>>>, d: usize) -> Result<Vec<f64>> {
    let m = m.as_ref().ok_or_else(|| Error::Config(format!("b.{name} is required")))?;
    if m.len() != d || m.iter().any(|r| r.len() != d) {
        return Err(Error::Config(format!("b.{name} must be {d}×{d}")));
    }
    Ok(m.iter().flatten().copied().collect())
}

impl ModelSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<FieldModel> {
        let dims = LatticeDims::new(self.nu, self.d)?;
        let params = LongRangeParams::new(self.alpha, self.k, self.nu)?;
        let slow = self.slow.kind;
        match self.kind {
            ModelKind::PowerLaw => {
                let amps = match &self.amplitude {
                    Some(a) => a.clone(),
                    None => {
                        if self.nu != 1 {
                            return Err(Error::Config(
                                "amplitude must be given for power-law models with nu > 1".into(),
                            ));
                        }
                        vec![PowerLawCovariance::balanced_amplitude(self.alpha, self.k)?; self.d]
                    }
                };
                let model = PowerLawCovariance::new(dims, self.alpha, amps)?;
                Ok(FieldModel::PowerLaw { model, params, slow })
            }
            ModelKind::Density => {
                let model = SpectralDensityModel::new(dims, params, self.angular(dims)?, self.smooth()?)?;
                let model = if self.normalize {
                    let m = self.resolution.unwrap_or(if self.nu == 1 { 4096 } else { 128 });
                    let t = covariance_table(&model, 1, m)?;
                    let zero = vec![0i64; self.nu];
                    let var: Vec<f64> = (0..self.d).map(|j| t.at(j, j, &zero)).collect();
                    model.with_coordinate_variances(&var)?
                } else {
                    model
                };
                Ok(FieldModel::Density { model, slow, resolution: self.resolution })
            }
        }
    }

    fn smooth(&self) -> Result<SmoothFactor> {
        match self.h.kind.as_str() {
            "constant" => Ok(SmoothFactor::Constant(self.h.value)),
            "raised_cosine" => Ok(SmoothFactor::RaisedCosine { h0: self.h.value }),
            other => Err(Error::Config(format!("unknown h.kind '{other}'"))),
        }
    }

    fn angular(&self, dims: LatticeDims) -> Result<Vec<AngularFactor>> {
        let d = dims.d;
        let re = |v: f64| Complex64::new(v, 0.0);
        match self.b.kind.as_str() {
            "identity" => Ok((0..d * d)
                .map(|e| AngularFactor::Constant(re(if e / d == e % d { 1.0 } else { 0.0 })))
                .collect()),
            "constant" => {
                let m = real_matrix("matrix", &self.b.matrix, d)?;
                let im = match &self.b.matrix_im {
                    Some(_) => real_matrix("matrix_im", &self.b.matrix_im, d)?,
                    None => vec![0.0; d * d],
                };
                Ok(m.iter().zip(&im).map(|(a, b)| AngularFactor::Constant(Complex64::new(*a, *b))).collect())
            }
            "signed" => {
                if self.nu != 1 {
                    return Err(Error::Config("b.kind = 'signed' needs nu = 1".into()));
                }
                let p = real_matrix("plus", &self.b.plus, d)?;
                let m = real_matrix("minus", &self.b.minus, d)?;
                Ok(p.iter()
                    .zip(&m)
                    .map(|(a, b)| AngularFactor::Signed { plus: re(*a), minus: re(*b) })
                    .collect())
            }
            "harmonic" => {
                if self.nu != 2 {
                    return Err(Error::Config("b.kind = 'harmonic' needs nu = 2".into()));
                }
                let mean = self.b.mean.unwrap_or(1.0);
                let amplitude = self.b.amplitude.unwrap_or(0.0);
                let order = self.b.order.unwrap_or(2);
                Ok((0..d * d)
                    .map(|e| {
                        if e / d == e % d {
                            AngularFactor::Harmonic { mean, amplitude, order }
                        } else {
                            AngularFactor::Constant(re(0.0))
                        }
                    })
                    .collect())
            }
            other => Err(Error::Config(format!("unknown b.kind '{other}'"))),
        }
    }
}

impl FieldModel {
    pub fn dims(&self) -> LatticeDims {
        match self {
            FieldModel::Density { model, .. } => model.dims,
            FieldModel::PowerLaw { model, .. } => model.dims,
        }
    }

    pub fn params(&self) -> LongRangeParams {
        match self {
            FieldModel::Density { model, .. } => model.params,
            FieldModel::PowerLaw { params, .. } => *params,
        }
    }

    pub fn slow(&self) -> SlowVarying {
        match self {
            FieldModel::Density { slow, .. } | FieldModel::PowerLaw { slow, .. } => *slow,
        }
    }

    /// Covariance table covering `[-max_lag, max_lag]^ν`.
    pub fn covariance(&self, max_lag: usize) -> Result<CovarianceTable> {
        match self {
            FieldModel::PowerLaw { model, .. } => Ok(model.table(max_lag)),
            FieldModel::Density { model, resolution, .. } => {
                let floor = if model.dims.nu == 1 { 4096 } else { 64 };
                let m = resolution.unwrap_or(floor).max((4 * max_lag).next_power_of_two());
                covariance_table(model, max_lag, m)
            }
        }
    }
}
