use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid state tangent: trace {0:e}")]
    InvalidTangent(f64),

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("not a CPTP map: min eigenvalue {min_eig:e}, trace-preservation residual {tp_residual:e}")]
    NotCptp { min_eig: f64, tp_residual: f64 },

    #[error("invalid channel tangent: output partial trace residual {0:e}")]
    InvalidChannelTangent(f64),

    #[error("unknown channel family `{0}`")]
    UnknownFamily(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    #[error("memory budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("invalid tangent simulation: {0}")]
    InvalidSimulation(String),

    #[error("degenerate estimation problem: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Coarse failure classes, shared by the CLI exit codes and the C status
/// codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid input or configuration.
    Config,
    Numeric,
    Budget,
    Degenerate,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Numerical(_) => ErrorKind::Numeric,
            Error::BudgetExceeded(_) => ErrorKind::Budget,
            Error::Degenerate(_) => ErrorKind::Degenerate,
            _ => ErrorKind::Config,
        }
    }
}
