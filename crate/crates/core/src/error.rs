use thiserror::Error;

/// Errors raised by model construction, quadrature, sampling and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectral density is singular at the origin")]
    OriginEvaluation,

    #[error("model validation failed: {0}")]
    ModelValidation(String),

    #[error("quadrature resolution insufficient: r(0) changed by {change:.3e} on grid doubling (tolerance {tolerance:.3e})")]
    Resolution { change: f64, tolerance: f64 },

    #[error("quadrature did not converge within depth {depth}")]
    QuadratureNonConvergence { depth: usize },

    #[error("lag {lag:?} outside covariance table (max lag {max_lag})")]
    TableRange { lag: Vec<i64>, max_lag: usize },

    #[error("angular estimate unstable along direction {direction}: relative spread {spread:.3e}")]
    Instability { direction: String, spread: f64 },

    #[error("grid incompatibility: {0}")]
    GridIncompatibility(String),

    #[error("matrix is not positive semidefinite: minimum eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("circulant embedding failed: eigenvalue {min_eigenvalue:.3e} below -{tolerance:.1e} x {max_eigenvalue:.3e}")]
    EmbeddingFailure {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
        tolerance: f64,
    },

    #[error("quadrature dimension {dim} exceeds the supported limit {limit}")]
    Dimensionality { dim: usize, limit: usize },

    #[error("need at least {needed} replicates, got {got}")]
    InsufficientReplicates { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("correlation {0} outside [-1, 1]")]
    Domain(f64),

    #[error("assumption violated: psi = {0} > 1")]
    Assumption(f64),

    #[error("malformed index sequence: {0}")]
    MalformedSequence(String),

    #[error("total degree {degree} exceeds cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("model is not diagonal: {0}")]
    NonDiagonalModel(String),

    #[error("argument {value} outside the torus [-{bound}, {bound})")]
    TorusDomain { value: f64, bound: f64 },

    #[error("imaginary residue {imag:.3e} too large relative to real part {real:.3e}")]
    ImaginaryResidue { real: f64, imag: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("projected runtime {projected:.1}s exceeds budget {budget:.1}s")]
    Budget { projected: f64, budget: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
