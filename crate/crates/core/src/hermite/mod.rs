//! Probabilists' Hermite polynomials and product-Hermite expansions.

mod basis;
mod index;
mod moments;

pub use basis::{
    hermite_to_monomial, monomial_to_hermite, transform_functional, Polynomial,
    DEFAULT_DEGREE_CAP,
};
pub use index::IndexMaps;
pub use moments::{psi_bound, tail_moment_check, tail_moment_monte_carlo, TailMomentReport};

use crate::error::{Error, Result};
use crate::scalar::{factorial, Scalar};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// `H_n(x)` by the upward three-term recurrence.
pub fn hermite_poly<S: Scalar>(n: usize, x: S) -> S {
    let mut prev = S::one();
    if n == 0 {
        return prev;
    }
    let mut cur = x.clone();
    for m in 1..n {
        let next = x.clone() * cur.clone() - <S as Scalar>::from_usize(m) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// All of `H_0(x), …, H_n(x)`.
pub fn hermite_values<S: Scalar>(n: usize, x: S) -> Vec<S> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(S::one());
    if n >= 1 {
        out.push(x.clone());
    }
    for m in 1..n {
        let next = x.clone() * out[m].clone() - <S as Scalar>::from_usize(m) * out[m - 1].clone();
        out.push(next);
    }
    out
}

/// Finite sum `Σ c_κ Π_j H_{κ_j}(x_j)` over multi-indices `κ` of any orders.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductHermite<S> {
    d: usize,
    terms: BTreeMap<Vec<usize>, S>,
}

impl<S: Scalar> ProductHermite<S> {
    pub fn new(d: usize) -> Self {
        Self { d, terms: BTreeMap::new() }
    }

    pub fn from_terms<I>(d: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, S)>,
    {
        let mut out = Self::new(d);
        for (idx, c) in terms {
            out.add_term(idx, c)?;
        }
        Ok(out)
    }

    /// Adds `c` to the coefficient of `index`; zero results are dropped.
    pub fn add_term(&mut self, index: Vec<usize>, c: S) -> Result<()> {
        if index.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: index.len() });
        }
        let entry = self.terms.entry(index.clone()).or_insert_with(S::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(&index);
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, S> {
        &self.terms
    }

    pub fn coefficient(&self, index: &[usize]) -> S {
        self.terms.get(index).cloned().unwrap_or_else(S::zero)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(|k| k.iter().sum()).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.terms.keys().map(|k| k.iter().sum()).min().unwrap_or(0)
    }

    pub fn eval(&self, x: &[S]) -> Result<S> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len() });
        }
        let top = self.terms.keys().flat_map(|k| k.iter().copied()).max().unwrap_or(0);
        let tables: Vec<Vec<S>> = x.iter().map(|xj| hermite_values(top, xj.clone())).collect();
        let mut acc = S::zero();
        for (idx, c) in &self.terms {
            let mut term = c.clone();
            for (j, &kj) in idx.iter().enumerate() {
                term = term * tables[j][kj].clone();
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// `Σ c² / Π k_j!`, the square-summability quantity of the tail condition.
    pub fn tail_condition_value(&self) -> S {
        self.terms
            .iter()
            .map(|(idx, c)| c.clone() * c.clone() / multi_factorial::<S>(idx))
            .fold(S::zero(), |a, b| a + b)
    }

    /// `E[H(X)²]` for a standard normal vector: `Σ c² Π k_j!`.
    pub fn second_moment(&self) -> S {
        self.terms
            .iter()
            .map(|(idx, c)| c.clone() * c.clone() * multi_factorial::<S>(idx))
            .fold(S::zero(), |a, b| a + b)
    }

    /// `E[H(X)H(Y)]` when `(X_j, Y_j)` are standard pairs with correlation
    /// `r_j` and distinct coordinates are independent.
    pub fn cross_moment_diagonal(&self, r_diag: &[S]) -> Result<S> {
        if r_diag.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: r_diag.len() });
        }
        for r in r_diag {
            if r.abs() > S::one() {
                return Err(Error::Domain(r.to_f64_lossy()));
            }
        }
        let mut acc = S::zero();
        for (idx, c) in &self.terms {
            let mut term = c.clone() * c.clone() * multi_factorial::<S>(idx);
            for (j, &kj) in idx.iter().enumerate() {
                term = term * r_diag[j].powu(kj);
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// Restriction to the terms of total order exactly `k`.
    pub fn order_part(&self, k: usize) -> Self {
        Self {
            d: self.d,
            terms: self
                .terms
                .iter()
                .filter(|(idx, _)| idx.iter().sum::<usize>() == k)
                .map(|(i, c)| (i.clone(), c.clone()))
                .collect(),
        }
    }
}

pub(crate) fn multi_factorial<S: Scalar>(idx: &[usize]) -> S {
    idx.iter().fold(S::one(), |acc, &k| acc * factorial::<S>(k))
}

/// Order-`k` part of a functional: every multi-index sums to `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteExpansion<S> {
    k: usize,
    inner: ProductHermite<S>,
}

impl<S: Scalar> HermiteExpansion<S> {
    pub fn new<I>(d: usize, k: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, S)>,
    {
        Self::from_product(k, ProductHermite::from_terms(d, terms)?)
    }

    pub fn from_product(k: usize, inner: ProductHermite<S>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("order k must be at least 1".into()));
        }
        if inner.is_empty() {
            return Err(Error::InvalidParameter("expansion has no nonzero coefficient".into()));
        }
        if let Some(bad) = inner.terms.keys().find(|i| i.iter().sum::<usize>() != k) {
            return Err(Error::InvalidParameter(format!(
                "multi-index {bad:?} does not have total order {k}"
            )));
        }
        Ok(Self { k, inner })
    }

    /// The zero functional of order `k`; the only expansion allowed to have
    /// no nonzero coefficient.
    pub fn zero(d: usize, k: usize) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::InvalidParameter("zero expansion needs d, k ≥ 1".into()));
        }
        Ok(Self { k, inner: ProductHermite::new(d) })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.inner.d
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, S> {
        &self.inner.terms
    }

    pub fn as_product(&self) -> &ProductHermite<S> {
        &self.inner
    }

    pub fn eval(&self, x: &[S]) -> Result<S> {
        self.inner.eval(x)
    }

    pub fn cross_moment_diagonal(&self, r_diag: &[S]) -> Result<S> {
        self.inner.cross_moment_diagonal(r_diag)
    }
}

/// Higher-order remainder: every multi-index sums to at least `k + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailExpansion<S> {
    k: usize,
    inner: ProductHermite<S>,
}

impl<S: Scalar> TailExpansion<S> {
    pub fn new<I>(d: usize, k: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, S)>,
    {
        Self::from_product(k, ProductHermite::from_terms(d, terms)?)
    }

    pub fn from_product(k: usize, inner: ProductHermite<S>) -> Result<Self> {
        if let Some(bad) = inner.terms.keys().find(|i| i.iter().sum::<usize>() <= k) {
            return Err(Error::InvalidParameter(format!(
                "tail multi-index {bad:?} has order at most {k}"
            )));
        }
        Ok(Self { k, inner })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.inner.d
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, S> {
        &self.inner.terms
    }

    pub fn as_product(&self) -> &ProductHermite<S> {
        &self.inner
    }

    pub fn eval(&self, x: &[S]) -> Result<S> {
        self.inner.eval(x)
    }

    pub fn tail_condition_value(&self) -> S {
        self.inner.tail_condition_value()
    }

    pub fn second_moment(&self) -> S {
        self.inner.second_moment()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TermRecord {
    pub index: Vec<usize>,
    pub c: f64,
}

/// JSON layout `{d, k, terms: [{index, c}]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExpansionRecord {
    pub d: usize,
    pub k: usize,
    pub terms: Vec<TermRecord>,
}

impl ExpansionRecord {
    fn from_parts(d: usize, k: usize, terms: &BTreeMap<Vec<usize>, f64>) -> Self {
        Self {
            d,
            k,
            terms: terms.iter().map(|(i, c)| TermRecord { index: i.clone(), c: *c }).collect(),
        }
    }

    fn into_terms(self) -> impl Iterator<Item = (Vec<usize>, f64)> {
        self.terms.into_iter().map(|t| (t.index, t.c))
    }
}

impl HermiteExpansion<f64> {
    pub fn to_record(&self) -> ExpansionRecord {
        ExpansionRecord::from_parts(self.d(), self.k, self.terms())
    }

    pub fn from_record(rec: ExpansionRecord) -> Result<Self> {
        let (d, k) = (rec.d, rec.k);
        Self::new(d, k, rec.into_terms())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("expansion serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_record(serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?)
    }
}

impl TailExpansion<f64> {
    pub fn to_record(&self) -> ExpansionRecord {
        ExpansionRecord::from_parts(self.d(), self.k, self.terms())
    }

    pub fn from_record(rec: ExpansionRecord) -> Result<Self> {
        let (d, k) = (rec.d, rec.k);
        Self::new(d, k, rec.into_terms())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("expansion serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_record(serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?)
    }
}
