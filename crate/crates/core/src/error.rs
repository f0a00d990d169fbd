use thiserror::Error;

use crate::layout::Mode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("occupation {occupation} of mode {mode} exceeds truncation n_max = {n_max}")]
    OccupationOutOfRange {
        mode: Mode,
        occupation: usize,
        n_max: usize,
    },

    #[error("mode {0} is not part of the layout")]
    UnknownMode(Mode),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("operands live on different mode layouts")]
    LayoutMismatch,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("dimension {dimension} exceeds the configured budget of {budget} basis states")]
    DimensionTooLarge { dimension: usize, budget: usize },

    #[error(
        "truncation leakage {leakage:.3e} exceeds threshold {threshold:.3e}; \
         try n_max >= {suggested_n_max} on mode {mode}"
    )]
    Truncation {
        mode: Mode,
        leakage: f64,
        threshold: f64,
        suggested_n_max: usize,
    },

    #[error("pair terms need the conjugate modes (axion-, photon-); layout has only {0}")]
    PairTermsUnrepresentable(String),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("ill-conditioned probe set (condition number {condition:.3e}); re-randomize the probes")]
    IllConditioned { condition: f64 },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("Krylov exponential failed to converge: {0}")]
    KrylovFailure(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
