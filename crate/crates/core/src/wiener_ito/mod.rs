//! Discretized multiple Wiener–Itô integrals with respect to a Gaussian
//! random spectral measure.

mod increments;
mod integral;
mod kernel;
mod limit;
mod similarity;

pub use increments::{sample_increments, IncrementSampler, SpectralIncrementSample, SymmetricPartition};
pub use integral::{multiple_integral, multiple_integrals, multiple_integrals_complex};
pub use kernel::{kernel_convergence_sup, lattice_factor, limit_factor, KernelKind, KernelSpec};
pub use limit::{
    discrete_covariance, kernel_mellin, limit_covariance, sample_limit, sample_limit_joint, CompensatorReport, LimitSampler,
};
pub use similarity::{self_similarity_check, SelfSimilarityReport};
