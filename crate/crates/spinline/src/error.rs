use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes across chain construction, spectral analysis, state mapping,
/// and region searches.
///
/// The CLI maps every variant to an exit code through [`Error::exit_code`]:
/// validation problems exit 1, numerical faults exit 2.
#[derive(Debug, Error)]
pub enum Error {
    /// Chain length below the two-node minimum.
    #[error("chain length must be at least 2, got {0}")]
    InvalidLength(usize),

    /// Parameter outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Node index outside 1..=N.
    #[error("node index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    /// Parametrization breaks down, e.g. the sender unitary at |a2| = 1.
    #[error("degenerate parametrization: {0}")]
    DegenerateParametrization(String),

    /// Iterative eigensolver failed to converge.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// |f0|^2 + |fN|^2 exceeded 1 beyond tolerance, signalling an upstream
    /// numerical fault rather than bad user input.
    #[error("inconsistent receiver amplitudes: |f0|^2 + |fN|^2 = {0} exceeds 1")]
    InconsistentAmplitudes(f64),

    /// Effective transfer modulus exceeded 1 beyond tolerance.
    #[error("unitarity violation: effective modulus {0} exceeds 1")]
    UnitarityViolation(f64),

    /// Full-Hilbert oracle asked to enumerate a space larger than it supports.
    #[error("full-Hilbert oracle supports chains up to N = {max}, got N = {n}")]
    OracleScaleExceeded { n: usize, max: usize },

    /// Time window empty, inverted, or otherwise unusable.
    #[error("invalid time window [{lo}, {hi}]")]
    InvalidWindow { lo: f64, hi: f64 },

    /// Window policy incompatible with the requested profile family.
    #[error("invalid window policy: {0}")]
    InvalidWindowPolicy(String),

    /// Command line or config file failed validation.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 for validation errors, 2 for
    /// numerical failures detected mid-computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalFailure(_)
            | Error::InconsistentAmplitudes(_)
            | Error::UnitarityViolation(_) => 2,
            _ => 1,
        }
    }
}
