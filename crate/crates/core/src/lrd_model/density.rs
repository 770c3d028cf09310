//! Matrix spectral densities `g(u) = |u|^β F(u)` on the torus and the cell
//! quadrature that copes with the integrable singularity at the origin.

use super::{LatticeDims, LongRangeParams};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, is_hermitian, CMatrix};
use crate::numerics::GaussLegendre;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

/// A density of the form `|u|^β · F(u)` with `F` bounded near the origin.
pub trait SpectralDensity: Send + Sync {
    fn dims(&self) -> LatticeDims;
    /// The exponent `β` of the radial factor (`α − ν` for long-range models).
    fn radial_exponent(&self) -> f64;
    /// The bounded factor `F(u)`, a Hermitian `d × d` matrix.
    fn factor(&self, u: &[f64]) -> CMatrix;
}

/// One entry `b_{j,j'}` of the angular factor.
#[derive(Debug, Clone, PartialEq)]
pub enum AngularFactor {
    Constant(Complex64),
    /// `ν = 1`: values on the positive and negative half-lines.
    Signed { plus: Complex64, minus: Complex64 },
    /// `ν = 2`: `mean + amplitude · cos(order · φ)` with `φ` the polar angle.
    Harmonic { mean: f64, amplitude: f64, order: u32 },
}

impl AngularFactor {
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            AngularFactor::Constant(v) => AngularFactor::Constant(v * c),
            AngularFactor::Signed { plus, minus } => {
                AngularFactor::Signed { plus: plus * c, minus: minus * c }
            }
            AngularFactor::Harmonic { mean, amplitude, order } => {
                AngularFactor::Harmonic { mean: mean * c, amplitude: amplitude * c, order: *order }
            }
        }
    }

    pub fn eval(&self, theta: &[f64]) -> Complex64 {
        match self {
            AngularFactor::Constant(c) => *c,
            AngularFactor::Signed { plus, minus } => {
                if theta[0] >= 0.0 {
                    *plus
                } else {
                    *minus
                }
            }
            AngularFactor::Harmonic { mean, amplitude, order } => {
                let phi = theta[1].atan2(theta[0]);
                Complex64::new(mean + amplitude * (*order as f64 * phi).cos(), 0.0)
            }
        }
    }
}

/// Smooth even factor `h` on the torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothFactor {
    Constant(f64),
    /// `h0 · Π_l (1 + cos u_l) / 2`
    RaisedCosine { h0: f64 },
}

impl SmoothFactor {
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            SmoothFactor::Constant(c) => *c,
            SmoothFactor::RaisedCosine { h0 } => {
                h0 * u.iter().map(|x| 0.5 * (1.0 + x.cos())).product::<f64>()
            }
        }
    }

    pub fn at_origin(&self) -> f64 {
        match self {
            SmoothFactor::Constant(c) => *c,
            SmoothFactor::RaisedCosine { h0 } => *h0,
        }
    }
}

/// `g(u) = |u|^{α−ν} b(u/|u|) h(u)`, optionally rescaled per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensityModel {
    pub dims: LatticeDims,
    pub params: LongRangeParams,
    b: Vec<AngularFactor>,
    pub h: SmoothFactor,
    scale: Vec<f64>,
}

/// Directions on which the angular factor is validated.
pub(crate) fn probe_directions(nu: usize) -> Vec<Vec<f64>> {
    match nu {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..72)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / 72.0;
                vec![phi.cos(), phi.sin()]
            })
            .collect(),
        _ => {
            let mut out = Vec::new();
            for axis in 0..nu {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; nu];
                    v[axis] = s;
                    out.push(v);
                }
            }
            out
        }
    }
}

impl SpectralDensityModel {
    pub fn new(
        dims: LatticeDims,
        params: LongRangeParams,
        b: Vec<AngularFactor>,
        h: SmoothFactor,
    ) -> Result<Self> {
        if b.len() != dims.d * dims.d {
            return Err(Error::DimensionMismatch { expected: dims.d * dims.d, got: b.len() });
        }
        LongRangeParams::new(params.alpha, params.k, dims.nu)?;
        let model = Self { dims, params, b, h, scale: vec![1.0; dims.d] };
        model.validate()?;
        Ok(model)
    }

    /// Identity angular factor with the given smooth factor.
    pub fn isotropic(dims: LatticeDims, params: LongRangeParams, h: SmoothFactor) -> Result<Self> {
        let d = dims.d;
        let b = (0..d * d)
            .map(|e| {
                AngularFactor::Constant(Complex64::new(if e / d == e % d { 1.0 } else { 0.0 }, 0.0))
            })
            .collect();
        Self::new(dims, params, b, h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.h.at_origin() <= 0.0 {
            return Err(Error::ModelValidation("h(0) must be positive".into()));
        }
        for th in probe_directions(self.dims.nu) {
            self.check_direction(&th)?;
            let neg: Vec<f64> = th.iter().map(|v| -v).collect();
            let (bp, bn) = (self.b_matrix(&th), self.b_matrix(&neg));
            if (bn - bp.map(|z| z.conj())).iter().any(|z| z.norm() > 1e-12) {
                return Err(Error::ModelValidation(format!("b(-θ) ≠ conj b(θ) at θ = {th:?}")));
            }
        }
        Ok(())
    }

    fn check_direction(&self, theta: &[f64]) -> Result<()> {
        let m = self.b_matrix(theta);
        if !is_hermitian(&m, 1e-12) {
            return Err(Error::ModelValidation(format!("b(θ) not Hermitian at θ = {theta:?}")));
        }
        let (ev, _) = hermitian_eigen(&m);
        let scale = ev.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if ev[0] < -1e-12 * scale {
            return Err(Error::ModelValidation(format!(
                "b(θ) has eigenvalue {} at θ = {theta:?}",
                ev[0]
            )));
        }
        Ok(())
    }

    /// `b(θ)` including any per-coordinate rescaling.
    pub fn b_matrix(&self, theta: &[f64]) -> CMatrix {
        let d = self.dims.d;
        CMatrix::from_fn(d, d, |j, jp| {
            self.b[j * d + jp].eval(theta) * (self.scale[j] * self.scale[jp])
        })
    }

    /// The density value `g(u)`; the origin is rejected.
    pub fn eval(&self, u: &[f64]) -> Result<CMatrix> {
        if u.len() != self.dims.nu {
            return Err(Error::DimensionMismatch { expected: self.dims.nu, got: u.len() });
        }
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::OriginEvaluation);
        }
        let theta: Vec<f64> = u.iter().map(|v| v / norm).collect();
        self.check_direction(&theta)?;
        Ok(self.factor(u) * Complex64::new(norm.powf(self.radial_exponent()), 0.0))
    }

    /// Rescales coordinates so that the lag-zero covariance has unit diagonal.
    /// `variances` are the current `r_{j,j}(0)`.
    pub fn with_coordinate_variances(mut self, variances: &[f64]) -> Result<Self> {
        if variances.len() != self.dims.d {
            return Err(Error::DimensionMismatch { expected: self.dims.d, got: variances.len() });
        }
        for (s, v) in self.scale.iter_mut().zip(variances) {
            if *v <= 0.0 {
                return Err(Error::ModelValidation(format!("non-positive variance {v}")));
            }
            *s /= v.sqrt();
        }
        Ok(self)
    }

    pub fn coordinate_scale(&self) -> &[f64] {
        &self.scale
    }

    /// Angular factor entries with the per-coordinate rescaling folded in.
    pub fn scaled_angular(&self) -> Vec<AngularFactor> {
        let d = self.dims.d;
        self.b
            .iter()
            .enumerate()
            .map(|(e, f)| f.scaled(self.scale[e / d] * self.scale[e % d]))
            .collect()
    }
}

impl SpectralDensity for SpectralDensityModel {
    fn dims(&self) -> LatticeDims {
        self.dims
    }

    fn radial_exponent(&self) -> f64 {
        self.params.alpha - self.dims.nu as f64
    }

    fn factor(&self, u: &[f64]) -> CMatrix {
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let theta: Vec<f64> = if norm > 0.0 {
            u.iter().map(|v| v / norm).collect()
        } else {
            let mut t = vec![0.0; u.len()];
            t[0] = 1.0;
            t
        };
        self.b_matrix(&theta) * Complex64::new(self.h.eval(u), 0.0)
    }
}

/// Bounded density without a radial singularity.
#[derive(Clone)]
pub struct SmoothDensity {
    pub dims: LatticeDims,
    f: Arc<dyn Fn(&[f64]) -> CMatrix + Send + Sync>,
}

impl SmoothDensity {
    pub fn new(dims: LatticeDims, f: impl Fn(&[f64]) -> CMatrix + Send + Sync + 'static) -> Self {
        Self { dims, f: Arc::new(f) }
    }
}

impl SpectralDensity for SmoothDensity {
    fn dims(&self) -> LatticeDims {
        self.dims
    }

    fn radial_exponent(&self) -> f64 {
        0.0
    }

    fn factor(&self, u: &[f64]) -> CMatrix {
        (self.f)(u)
    }
}

const CORNER_NODES: usize = 24;

/// Nodes and weights with `∫_cell |x|^β F(x) dx ≈ Σ w F(x)` for smooth `F`.
///
/// Cells that straddle a coordinate hyperplane through the origin are split
/// there; pieces with the origin as a corner use a radial substitution that
/// absorbs the singularity. Supports `ν ≤ 2` when the origin is touched.
pub fn cell_rule(beta: f64, lo: &[f64], hi: &[f64], q: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let nu = lo.len();
    let mut out = Vec::new();
    let mut pieces = vec![(lo.to_vec(), hi.to_vec())];
    for axis in 0..nu {
        let mut next = Vec::new();
        for (a, b) in pieces {
            if a[axis] < 0.0 && b[axis] > 0.0 {
                let (mut b1, mut a2) = (b.clone(), a.clone());
                b1[axis] = 0.0;
                a2[axis] = 0.0;
                next.push((a, b1));
                next.push((a2, b));
            } else {
                next.push((a, b));
            }
        }
        pieces = next;
    }
    let gl = GaussLegendre::new(q);
    for (a, b) in pieces {
        let touches = (0..nu).all(|l| a[l] == 0.0 || b[l] == 0.0);
        if touches && beta != 0.0 {
            corner_rule(beta, &a, &b, &mut out)?;
        } else {
            regular_rule(&gl, beta, &a, &b, &mut out);
        }
    }
    Ok(out)
}

fn regular_rule(gl: &GaussLegendre, beta: f64, a: &[f64], b: &[f64], out: &mut Vec<(Vec<f64>, f64)>) {
    let nu = a.len();
    let q = gl.nodes.len();
    let total = q.pow(nu as u32);
    for flat in 0..total {
        let mut rem = flat;
        let mut x = vec![0.0; nu];
        let mut w = 1.0;
        for l in (0..nu).rev() {
            let i = rem % q;
            rem /= q;
            let half = 0.5 * (b[l] - a[l]);
            x[l] = 0.5 * (a[l] + b[l]) + half * gl.nodes[i];
            w *= half * gl.weights[i];
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if beta != 0.0 {
            w *= norm.powf(beta);
        }
        out.push((x, w));
    }
}

fn corner_rule(beta: f64, a: &[f64], b: &[f64], out: &mut Vec<(Vec<f64>, f64)>) -> Result<()> {
    let nu = a.len();
    // orient the piece into the positive orthant
    let sign: Vec<f64> = (0..nu).map(|l| if b[l] > 0.0 { 1.0 } else { -1.0 }).collect();
    let ext: Vec<f64> = (0..nu).map(|l| (b[l] - a[l]).abs()).collect();
    let gl = GaussLegendre::new(CORNER_NODES);
    match nu {
        1 => {
            // u = x^{β+1}
            let p = beta + 1.0;
            if p <= 0.0 {
                return Err(Error::InvalidParameter(format!("non-integrable exponent {beta}")));
            }
            let top = ext[0].powf(p);
            for half in 0..2 {
                let (u0, u1) = (top * half as f64 / 2.0, top * (half + 1) as f64 / 2.0);
                for (t, w) in gl.nodes.iter().zip(&gl.weights) {
                    let u = 0.5 * (u0 + u1) + 0.5 * (u1 - u0) * t;
                    let x = u.powf(1.0 / p);
                    out.push((vec![sign[0] * x], 0.5 * (u1 - u0) * w / p));
                }
            }
            Ok(())
        }
        2 => {
            // polar coordinates, u = r^{β+2} on each of the two triangles
            let p = beta + 2.0;
            if p <= 0.0 {
                return Err(Error::InvalidParameter(format!("non-integrable exponent {beta}")));
            }
            let split = ext[1].atan2(ext[0]);
            for (t0, t1, lower) in [(0.0, split, true), (split, PI / 2.0, false)] {
                for (tn, tw) in gl.nodes.iter().zip(&gl.weights) {
                    let th = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * tn;
                    let rmax = if lower { ext[0] / th.cos() } else { ext[1] / th.sin() };
                    let top = rmax.powf(p);
                    for (un, uw) in gl.nodes.iter().zip(&gl.weights) {
                        let u = 0.5 * top * (1.0 + un);
                        let r = u.powf(1.0 / p);
                        let w = 0.5 * (t1 - t0) * tw * 0.5 * top * uw / p;
                        out.push((vec![sign[0] * r * th.cos(), sign[1] * r * th.sin()], w));
                    }
                }
            }
            Ok(())
        }
        _ => Err(Error::Dimensionality { dim: nu, limit: 2 }),
    }
}

/// `∫_cell g` for a density, using [`cell_rule`].
pub fn cell_mass(density: &dyn SpectralDensity, lo: &[f64], hi: &[f64], q: usize) -> Result<CMatrix> {
    let d = density.dims().d;
    let mut acc = CMatrix::zeros(d, d);
    for (x, w) in cell_rule(density.radial_exponent(), lo, hi, q)? {
        acc += density.factor(&x) * Complex64::new(w, 0.0);
    }
    Ok(acc)
}
