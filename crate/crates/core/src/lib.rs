//! Long-range-dependent vector Gaussian fields on integer lattices, Hermite
//! functionals of them, and samplers for their non-central limits.

pub mod error;
pub mod field_sampler;
pub mod fft;
pub mod harness;
pub mod hermite;
pub mod linalg;
pub mod lrd_model;
pub mod numerics;
pub mod rng;
pub mod scalar;
pub mod spectral_measure;
pub mod sums;
pub mod wiener_ito;

pub use error::{Error, Result};

/// Floating-point scalar used by the samplers and spectral code.
pub type Real = f64;
/// Exact scalar for moment identities.
pub type Exact = num_rational::BigRational;

pub type Expansion = hermite::HermiteExpansion<Real>;
pub type ExactExpansion = hermite::HermiteExpansion<Exact>;
pub type Tail = hermite::TailExpansion<Real>;
pub type ExactTail = hermite::TailExpansion<Exact>;
pub type SingleExpansion = hermite::HermiteExpansion<f32>;
