//! Conversion between the product-Hermite basis and plain monomials.

use super::ProductHermite;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::collections::BTreeMap;

pub const DEFAULT_DEGREE_CAP: usize = 10;

/// Multivariate polynomial in monomial form, keyed by exponent vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<S> {
    pub d: usize,
    pub coeffs: BTreeMap<Vec<usize>, S>,
}

impl<S: Scalar> Polynomial<S> {
    pub fn new(d: usize) -> Self {
        Self { d, coeffs: BTreeMap::new() }
    }

    pub fn constant(d: usize, c: S) -> Self {
        let mut p = Self::new(d);
        p.add(vec![0; d], c);
        p
    }

    pub fn add(&mut self, exps: Vec<usize>, c: S) {
        let e = self.coeffs.entry(exps.clone()).or_insert_with(S::zero);
        *e = e.clone() + c;
        if e.is_zero() {
            self.coeffs.remove(&exps);
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[S]) -> S {
        let mut acc = S::zero();
        for (e, c) in &self.coeffs {
            let mut t = c.clone();
            for (xj, &ej) in x.iter().zip(e) {
                t = t * xj.powu(ej);
            }
            acc = acc + t;
        }
        acc
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::new(self.d);
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &other.coeffs {
                let e: Vec<usize> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add(e, ca.clone() * cb.clone());
            }
        }
        out
    }
}

/// Monomial coefficients of `H_0 … H_n`: row `m` holds `H_m(x) = Σ_i row[i] x^i`.
fn hermite_monomial_table<S: Scalar>(n: usize) -> Vec<Vec<S>> {
    let mut rows: Vec<Vec<S>> = vec![vec![S::one()]];
    if n >= 1 {
        rows.push(vec![S::zero(), S::one()]);
    }
    for m in 1..n {
        let mut next = vec![S::zero(); m + 2];
        for (i, c) in rows[m].iter().enumerate() {
            next[i + 1] = next[i + 1].clone() + c.clone();
        }
        let mf = <S as Scalar>::from_usize(m);
        for (i, c) in rows[m - 1].iter().enumerate() {
            next[i] = next[i].clone() - mf.clone() * c.clone();
        }
        rows.push(next);
    }
    rows
}

/// Hermite coefficients of `1, x, …, x^n`: row `m` holds `x^m = Σ_i row[i] H_i(x)`.
fn monomial_hermite_table<S: Scalar>(n: usize) -> Vec<Vec<S>> {
    let mut rows: Vec<Vec<S>> = vec![vec![S::one()]];
    for m in 0..n {
        // x·H_i = H_{i+1} + i·H_{i-1}
        let mut next = vec![S::zero(); m + 2];
        for (i, c) in rows[m].iter().enumerate() {
            next[i + 1] = next[i + 1].clone() + c.clone();
            if i >= 1 {
                next[i - 1] = next[i - 1].clone() + <S as Scalar>::from_usize(i) * c.clone();
            }
        }
        rows.push(next);
    }
    rows
}

fn check_cap(degree: usize, cap: usize) -> Result<()> {
    if degree > cap {
        Err(Error::DegreeCap { degree, cap })
    } else {
        Ok(())
    }
}

/// Tensor-expands each coefficient through per-axis univariate tables.
fn expand_tensor<S: Scalar>(
    d: usize,
    src: &BTreeMap<Vec<usize>, S>,
    table: &[Vec<S>],
) -> BTreeMap<Vec<usize>, S> {
    let mut out: BTreeMap<Vec<usize>, S> = BTreeMap::new();
    for (idx, c) in src {
        let mut partial: Vec<(Vec<usize>, S)> = vec![(Vec::with_capacity(d), c.clone())];
        for &kj in idx {
            let mut grown = Vec::new();
            for (prefix, pc) in &partial {
                for (i, tc) in table[kj].iter().enumerate() {
                    if tc.is_zero() {
                        continue;
                    }
                    let mut e = prefix.clone();
                    e.push(i);
                    grown.push((e, pc.clone() * tc.clone()));
                }
            }
            partial = grown;
        }
        for (e, v) in partial {
            let slot = out.entry(e.clone()).or_insert_with(S::zero);
            *slot = slot.clone() + v;
            if slot.is_zero() {
                out.remove(&e);
            }
        }
    }
    out
}

pub fn hermite_to_monomial<S: Scalar>(h: &ProductHermite<S>, cap: usize) -> Result<Polynomial<S>> {
    let deg = h.max_degree();
    check_cap(deg, cap)?;
    let table = hermite_monomial_table::<S>(deg);
    Ok(Polynomial { d: h.d(), coeffs: expand_tensor(h.d(), h.terms(), &table) })
}

pub fn monomial_to_hermite<S: Scalar>(p: &Polynomial<S>, cap: usize) -> Result<ProductHermite<S>> {
    let deg = p.degree();
    check_cap(deg, cap)?;
    let table = monomial_hermite_table::<S>(deg);
    ProductHermite::from_terms(p.d, expand_tensor(p.d, &p.coeffs, &table))
}

/// Re-expands `x' ↦ H(D x')` in the product-Hermite basis of the `d'` new
/// variables. `dmat` has `d` rows and `d'` columns.
pub fn transform_functional<S: Scalar>(
    h: &ProductHermite<S>,
    dmat: &[Vec<S>],
    cap: usize,
) -> Result<ProductHermite<S>> {
    if dmat.len() != h.d() {
        return Err(Error::DimensionMismatch { expected: h.d(), got: dmat.len() });
    }
    let dp = dmat.first().map(|r| r.len()).unwrap_or(0);
    if let Some(row) = dmat.iter().find(|r| r.len() != dp) {
        return Err(Error::DimensionMismatch { expected: dp, got: row.len() });
    }
    let mono = hermite_to_monomial(h, cap)?;
    let top = mono.coeffs.keys().flat_map(|e| e.iter().copied()).max().unwrap_or(0);

    // powers[j][e] = (Σ_l D[j][l] x'_l)^e
    let mut powers: Vec<Vec<Polynomial<S>>> = Vec::with_capacity(h.d());
    for row in dmat {
        let mut lin = Polynomial::new(dp);
        for (l, c) in row.iter().enumerate() {
            let mut e = vec![0; dp];
            e[l] = 1;
            lin.add(e, c.clone());
        }
        let mut pw = vec![Polynomial::constant(dp, S::one())];
        for e in 1..=top {
            let next = pw[e - 1].mul(&lin);
            pw.push(next);
        }
        powers.push(pw);
    }

    let mut out = Polynomial::new(dp);
    for (e, c) in &mono.coeffs {
        let mut term = Polynomial::constant(dp, c.clone());
        for (j, &ej) in e.iter().enumerate() {
            if ej > 0 {
                term = term.mul(&powers[j][ej]);
            }
        }
        for (te, tc) in term.coeffs {
            out.add(te, tc);
        }
    }
    monomial_to_hermite(&out, cap)
}
