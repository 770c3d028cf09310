//! Kernels of the multiple integrals: all depend on the argument sum only.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const SERIES_THRESHOLD: f64 = 1e-6;

/// `(e^{its} − 1)/(is)`, continuous at `s = 0` with value `t`.
pub fn limit_factor(s: f64, t: f64) -> Complex64 {
    if s == 0.0 {
        return Complex64::new(t, 0.0);
    }
    let z = t * s;
    Complex64::from_polar(2.0 * (z / 2.0).sin() / s, z / 2.0)
}

/// `(e^{is} − 1)/(N(e^{is/N} − 1)) = N^{-1} Σ_{u<N} e^{ius/N}`.
pub fn lattice_factor(s: f64, n: u64) -> Complex64 {
    let nf = n as f64;
    let den = (s / (2.0 * nf)).sin();
    if den.abs() < SERIES_THRESHOLD {
        let mut acc = Complex64::new(0.0, 0.0);
        for u in 0..n {
            acc += Complex64::from_polar(1.0, u as f64 * s / nf);
        }
        return acc / nf;
    }
    let modulus = (s / 2.0).sin() / (nf * den);
    Complex64::from_polar(modulus, s * (nf - 1.0) / (2.0 * nf))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `Π_l (e^{i s_l} − 1)/(i s_l)`
    Limit,
    /// `Π_l (e^{i t_l s_l} − 1)/(i s_l)`
    LimitAt(Vec<f64>),
    /// `Π_l (e^{i s_l} − 1)/(N(e^{i s_l/N} − 1))` on the torus
    Lattice(u64),
    /// Same product as `Lattice` without a coefficient.
    Transfer(u64),
}

/// A kernel of `k` vector arguments in `R^ν`, scaled by `coef`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub coef: f64,
    pub k: usize,
    pub nu: usize,
}

impl KernelSpec {
    pub fn limit(coef: f64, k: usize, nu: usize) -> Self {
        Self { kind: KernelKind::Limit, coef, k, nu }
    }

    pub fn limit_at(coef: f64, t: Vec<f64>, k: usize) -> Self {
        let nu = t.len();
        Self { kind: KernelKind::LimitAt(t), coef, k, nu }
    }

    pub fn lattice(coef: f64, n: u64, k: usize, nu: usize) -> Self {
        Self { kind: KernelKind::Lattice(n), coef, k, nu }
    }

    pub fn transfer(n: u64, k: usize, nu: usize) -> Self {
        Self { kind: KernelKind::Transfer(n), coef: 1.0, k, nu }
    }

    /// Value at argument sum `s ∈ R^ν`.
    pub fn eval_sum(&self, s: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(self.coef, 0.0);
        for (l, &sl) in s.iter().enumerate() {
            acc *= match &self.kind {
                KernelKind::Limit => limit_factor(sl, 1.0),
                KernelKind::LimitAt(t) => limit_factor(sl, t[l]),
                KernelKind::Lattice(n) | KernelKind::Transfer(n) => lattice_factor(sl, *n),
            };
        }
        acc
    }

    /// Value at `k` flattened `ν`-vectors `x[i·ν + l]`.
    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.k * self.nu {
            return Err(Error::DimensionMismatch { expected: self.k * self.nu, got: x.len() });
        }
        if let KernelKind::Lattice(n) | KernelKind::Transfer(n) = self.kind {
            let bound = n as f64 * PI;
            if let Some(&v) = x.iter().find(|v| !(-bound..bound).contains(*v)) {
                return Err(Error::TorusDomain { value: v, bound });
            }
        }
        let mut s = vec![0.0; self.nu];
        for (i, v) in x.iter().enumerate() {
            s[i % self.nu] += v;
        }
        Ok(self.eval_sum(&s))
    }
}

/// `max |f^N − f^0|` over a uniform grid of `grid` points per axis on
/// `[-T, T]^{kν}`.
pub fn kernel_convergence_sup(n: u64, half_width: f64, grid: usize, coef: f64, k: usize, nu: usize) -> f64 {
    let fnk = KernelSpec::lattice(coef, n, k, nu);
    let f0 = KernelSpec::limit(coef, k, nu);
    let dim = k * nu;
    let step = if grid > 1 { 2.0 * half_width / (grid - 1) as f64 } else { 0.0 };
    let total = grid.pow(dim as u32);
    let mut worst: f64 = 0.0;
    let mut x = vec![0.0; dim];
    for mut flat in 0..total {
        for slot in x.iter_mut() {
            *slot = -half_width + (flat % grid) as f64 * step;
            flat /= grid;
        }
        let (a, b) = (fnk.eval(&x), f0.eval(&x));
        if let (Ok(a), Ok(b)) = (a, b) {
            worst = worst.max((a - b).norm());
        }
    }
    worst
}
