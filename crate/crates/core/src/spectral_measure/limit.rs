//! The homogeneous limit measure with density `h0 |x|^{α−ν} b(x/|x|)` on `R^ν`.

use super::RectMeasure;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::lrd_model::{
    cell_mass, AngularFactor, FieldModel, LatticeDims, PowerLawCovariance, SpectralDensity,
    SpectralDensityModel,
};
use crate::numerics::radial_fourier_constant;
use num_complex::Complex64;

const ADAPTIVE_DEPTH: usize = 12;
const ADAPTIVE_TOLERANCE: f64 = 1e-12;
const ADAPTIVE_NODES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSpectralModel {
    pub dims: LatticeDims,
    pub alpha: f64,
    pub h0: f64,
    b: Vec<AngularFactor>,
}

impl LimitSpectralModel {
    pub fn new(dims: LatticeDims, alpha: f64, h0: f64, b: Vec<AngularFactor>) -> Result<Self> {
        if b.len() != dims.d * dims.d {
            return Err(Error::DimensionMismatch { expected: dims.d * dims.d, got: b.len() });
        }
        if !(alpha > 0.0 && alpha < dims.nu as f64) || !(h0 > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha}, h0 = {h0}")));
        }
        Ok(Self { dims, alpha, h0, b })
    }

    pub fn from_density_model(m: &SpectralDensityModel) -> Result<Self> {
        Self::new(m.dims, m.params.alpha, m.h.at_origin(), m.scaled_angular())
    }

    /// For `r(p) ~ a_j |p|^{-α}` the limit density is `a_j / C · |x|^{α−ν}`
    /// with `C` the Fourier constant of `|x|^{α−ν}` on `R^ν`.
    pub fn from_power_law(m: &PowerLawCovariance) -> Result<Self> {
        let d = m.dims.d;
        let c = radial_fourier_constant(m.alpha, m.dims.nu);
        let b = (0..d * d)
            .map(|e| {
                let v = if e / d == e % d { m.amplitudes[e / d] / c } else { 0.0 };
                AngularFactor::Constant(Complex64::new(v, 0.0))
            })
            .collect();
        Self::new(m.dims, m.alpha, 1.0, b)
    }

    pub fn from_field_model(m: &FieldModel) -> Result<Self> {
        match m {
            FieldModel::Density { model, .. } => Self::from_density_model(model),
            FieldModel::PowerLaw { model, .. } => Self::from_power_law(model),
        }
    }

    pub fn b_matrix(&self, theta: &[f64]) -> CMatrix {
        let d = self.dims.d;
        CMatrix::from_fn(d, d, |j, jp| self.b[j * d + jp].eval(theta))
    }

    pub fn density(&self, x: &[f64]) -> Result<CMatrix> {
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::OriginEvaluation);
        }
        Ok(self.factor(x) * Complex64::new(n.powf(self.alpha - self.dims.nu as f64), 0.0))
    }

    /// `∫_cell g0`.
    pub fn cell_mass(&self, lo: &[f64], hi: &[f64]) -> Result<CMatrix> {
        if lo.len() != self.dims.nu || hi.len() != self.dims.nu {
            return Err(Error::DimensionMismatch { expected: self.dims.nu, got: lo.len() });
        }
        if self.dims.nu == 1 {
            return Ok(self.line_mass(lo[0], hi[0]));
        }
        self.adaptive(lo, hi, 0)
    }

    /// Closed form on the line: `∫_a^b |x|^{α−1} dx` split at the origin.
    fn line_mass(&self, a: f64, b: f64) -> CMatrix {
        let al = self.alpha;
        let pos = (b.max(0.0).powf(al) - a.max(0.0).powf(al)) / al;
        let neg = ((-a).max(0.0).powf(al) - (-b).max(0.0).powf(al)) / al;
        let (bp, bn) = (self.b_matrix(&[1.0]), self.b_matrix(&[-1.0]));
        (bp * Complex64::new(pos, 0.0) + bn * Complex64::new(neg, 0.0)) * Complex64::new(self.h0, 0.0)
    }

    fn adaptive(&self, lo: &[f64], hi: &[f64], depth: usize) -> Result<CMatrix> {
        let whole = cell_mass(self, lo, hi, ADAPTIVE_NODES)?;
        let children = self.split(lo, hi);
        let mut parts = CMatrix::zeros(self.dims.d, self.dims.d);
        for (a, b) in &children {
            parts += cell_mass(self, a, b, ADAPTIVE_NODES)?;
        }
        let scale = parts.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        if (&whole - &parts).iter().all(|z| z.norm() <= ADAPTIVE_TOLERANCE * scale) {
            return Ok(parts);
        }
        if depth >= ADAPTIVE_DEPTH {
            return Err(Error::QuadratureNonConvergence { depth });
        }
        let mut acc = CMatrix::zeros(self.dims.d, self.dims.d);
        for (a, b) in &children {
            acc += self.adaptive(a, b, depth + 1)?;
        }
        Ok(acc)
    }

    fn split(&self, lo: &[f64], hi: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
        let nu = lo.len();
        (0..1usize << nu)
            .map(|mask| {
                let mut a = lo.to_vec();
                let mut b = hi.to_vec();
                for l in 0..nu {
                    let mid = 0.5 * (lo[l] + hi[l]);
                    if mask >> l & 1 == 0 {
                        b[l] = mid;
                    } else {
                        a[l] = mid;
                    }
                }
                (a, b)
            })
            .collect()
    }

    /// `max_{j,j'} |G0(A) − t^{-α} G0(tA)|`.
    pub fn homogeneity_residual(&self, lo: &[f64], hi: &[f64], t: f64) -> Result<f64> {
        let a = self.cell_mass(lo, hi)?;
        let tl: Vec<f64> = lo.iter().map(|v| v * t).collect();
        let th: Vec<f64> = hi.iter().map(|v| v * t).collect();
        let b = self.cell_mass(&tl, &th)? * Complex64::new(t.powf(-self.alpha), 0.0);
        Ok((a - b).iter().fold(0.0, |m, z| m.max(z.norm())))
    }
}

impl SpectralDensity for LimitSpectralModel {
    fn dims(&self) -> LatticeDims {
        self.dims
    }

    fn radial_exponent(&self) -> f64 {
        self.alpha - self.dims.nu as f64
    }

    fn factor(&self, u: &[f64]) -> CMatrix {
        let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let theta: Vec<f64> = if n > 0.0 {
            u.iter().map(|v| v / n).collect()
        } else {
            let mut t = vec![0.0; u.len()];
            t[0] = 1.0;
            t
        };
        self.b_matrix(&theta) * Complex64::new(self.h0, 0.0)
    }
}

impl RectMeasure for LimitSpectralModel {
    fn d(&self) -> usize {
        self.dims.d
    }

    fn nu(&self) -> usize {
        self.dims.nu
    }

    fn mass(&self, lo: &[f64], hi: &[f64]) -> Result<CMatrix> {
        self.cell_mass(lo, hi)
    }
}
