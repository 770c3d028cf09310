//! Long-range-dependent covariance and spectral-density models.

mod condition;
mod config;
mod covariance;
mod density;
mod reduction;

pub use condition::{estimate_angular, verify_lrd_condition, ConditionReport};
pub use config::{AngularSpec, FieldModel, ModelKind, ModelSpec, SlowSpec, SmoothSpec};
pub use covariance::{covariance_table, CovarianceTable, PowerLawCovariance};
pub use density::{
    cell_mass, cell_rule, AngularFactor, SmoothDensity, SmoothFactor, SpectralDensity, SpectralDensityModel,
};
pub use reduction::{orthonormal_reduction, Reduction};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeDims {
    pub nu: usize,
    pub d: usize,
}

impl LatticeDims {
    pub fn new(nu: usize, d: usize) -> Result<Self> {
        if nu == 0 || d == 0 {
            return Err(Error::InvalidParameter(format!("need nu, d ≥ 1, got nu={nu}, d={d}")));
        }
        Ok(Self { nu, d })
    }
}

/// Decay exponent `α` and Hermite order `k`, with `0 < α < ν/k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongRangeParams {
    pub alpha: f64,
    pub k: usize,
}

impl LongRangeParams {
    pub fn new(alpha: f64, k: usize, nu: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("order k must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha * (k as f64) < nu as f64) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} outside (0, nu/k) = (0, {})",
                nu as f64 / k as f64
            )));
        }
        Ok(Self { alpha, k })
    }

    /// Exponent of the normalization `N^{ν − kα/2}`.
    pub fn sum_exponent(&self, nu: usize) -> f64 {
        nu as f64 - self.k as f64 * self.alpha / 2.0
    }
}

/// Slowly varying factor `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlowVarying {
    #[default]
    One,
    /// `max(1, ln t)`
    Log,
}

impl SlowVarying {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SlowVarying::One => 1.0,
            SlowVarying::Log => t.ln().max(1.0),
        }
    }
}

/// One entry `a_{j,j'}` of the angular kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum AngularFunction {
    Constant(f64),
    /// `ν = 1`: values at `θ = +1` and `θ = −1`.
    Signed { plus: f64, minus: f64 },
    /// Values at listed unit directions; evaluation picks the nearest one.
    Directions(Vec<(Vec<f64>, f64)>),
}

impl AngularFunction {
    pub fn eval(&self, theta: &[f64]) -> f64 {
        match self {
            AngularFunction::Constant(c) => *c,
            AngularFunction::Signed { plus, minus } => {
                if theta[0] >= 0.0 {
                    *plus
                } else {
                    *minus
                }
            }
            AngularFunction::Directions(list) => {
                let mut best = (f64::NEG_INFINITY, 0.0);
                for (dir, v) in list {
                    let dot: f64 = dir.iter().zip(theta).map(|(a, b)| a * b).sum();
                    if dot > best.0 {
                        best = (dot, *v);
                    }
                }
                best.1
            }
        }
    }
}

/// `d × d` table of angular functions.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularKernel {
    pub dims: LatticeDims,
    entries: Vec<AngularFunction>,
}

impl AngularKernel {
    pub fn new(dims: LatticeDims, entries: Vec<AngularFunction>) -> Result<Self> {
        if entries.len() != dims.d * dims.d {
            return Err(Error::DimensionMismatch { expected: dims.d * dims.d, got: entries.len() });
        }
        Ok(Self { dims, entries })
    }

    pub fn constant(dims: LatticeDims, value: f64) -> Self {
        let d = dims.d;
        let entries = (0..d * d)
            .map(|e| AngularFunction::Constant(if e / d == e % d { value } else { 0.0 }))
            .collect();
        Self { dims, entries }
    }

    pub fn entry(&self, j: usize, jp: usize) -> &AngularFunction {
        &self.entries[j * self.dims.d + jp]
    }

    pub fn eval(&self, j: usize, jp: usize, theta: &[f64]) -> f64 {
        self.entry(j, jp).eval(theta)
    }

    /// Largest violation of `a_{j',j}(θ) = a_{j,j'}(−θ)` over `directions`.
    pub fn symmetry_defect(&self, directions: &[Vec<f64>]) -> f64 {
        let d = self.dims.d;
        let mut worst: f64 = 0.0;
        for th in directions {
            let neg: Vec<f64> = th.iter().map(|v| -v).collect();
            for j in 0..d {
                for jp in 0..d {
                    worst = worst.max((self.eval(jp, j, th) - self.eval(j, jp, &neg)).abs());
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(LongRangeParams::new(0.4, 2, 1).is_ok());
        assert!(LongRangeParams::new(0.5, 2, 1).is_err());
        assert!(LongRangeParams::new(0.0, 1, 1).is_err());
        assert!(LongRangeParams::new(0.9, 2, 2).is_ok());
    }

    #[test]
    fn slowly_varying_ratio_tends_to_one() {
        for l in [SlowVarying::One, SlowVarying::Log] {
            let r = l.eval(2.0e12) / l.eval(1.0e12);
            assert!((r - 1.0).abs() < 0.03, "{l:?}: {r}");
            assert!(l.eval(1.0) > 0.0);
        }
    }

    #[test]
    fn angular_lookup() {
        let f = AngularFunction::Signed { plus: 1.0, minus: 2.0 };
        assert_eq!(f.eval(&[1.0]), 1.0);
        assert_eq!(f.eval(&[-1.0]), 2.0);
        let g = AngularFunction::Directions(vec![(vec![1.0, 0.0], 3.0), (vec![0.0, 1.0], 4.0)]);
        assert_eq!(g.eval(&[0.2, 0.9]), 4.0);
    }
}
