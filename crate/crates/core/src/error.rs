use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A Laplace parameter at which `I + N_s` is numerically singular.
    #[error("characteristic value at s = {re}{im:+}i (|D| = {det_abs:e}, threshold {threshold:e})")]
    CharacteristicValue {
        re: f64,
        im: f64,
        det_abs: f64,
        threshold: f64,
    },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("quadrature budget exhausted: {0}")]
    QuadratureBudget(String),

    #[error("grid mismatch: expected n = {expected}, found n = {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("endpoint class error: {0}")]
    EndpointClass(String),

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("invalid input data: {0}")]
    Data(String),
}

impl Error {
    /// Coarse category used by the command line exit-code contract.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::Data(_) | Error::GridMismatch { .. } => ErrorCategory::Config,
            Error::CharacteristicValue { .. } => ErrorCategory::CharacteristicValue,
            Error::Domain(_)
            | Error::Convergence(_)
            | Error::QuadratureBudget(_)
            | Error::EndpointClass(_)
            | Error::Overflow(_) => ErrorCategory::Convergence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    CharacteristicValue,
    Convergence,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::CharacteristicValue => "characteristic-value",
            ErrorCategory::Convergence => "convergence",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
