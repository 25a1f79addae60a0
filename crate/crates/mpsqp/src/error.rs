use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are grouped by [`Error::kind`] into validation problems
/// (bad input) and numerical problems (the input is well formed but the
/// computation cannot proceed reliably).
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry in {0}")]
    NonFinite(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("value {value} outside domain {domain}")]
    OutOfDomain { value: f64, domain: String },
    #[error("memory cap exceeded: {requested} amplitudes requested, cap is {cap}")]
    CapExceeded { requested: usize, cap: usize },
    #[error("non-injective channel: {0}")]
    NonInjective(String),
    #[error("leading eigenvalue drift {0:e} after rescaling")]
    NormalizationDrift(f64),
    #[error("near pole: |1 - z*lambda| = {distance:e} at eigenvalue {eigenvalue}")]
    NearPole { eigenvalue: String, distance: f64 },
    #[error("channel is not normal and unital (defect {0:e})")]
    NotNormal(f64),
    #[error("singular resolvent for eigenvalue {eigenvalue} (|1 - e^-ik conj(lambda)| = {distance:e})")]
    Singular { eigenvalue: String, distance: f64 },
    #[error("eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("negative rate {value:e} for tau entry {entry}")]
    NegativeRate { entry: String, value: f64 },
    #[error("insufficient statistics: {0}")]
    Statistics(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Shape(_)
            | Error::NonFinite(_)
            | Error::Invalid(_)
            | Error::OutOfDomain { .. }
            | Error::CapExceeded { .. }
            | Error::Io(_)
            | Error::Parse(_) => ErrorKind::Validation,
            _ => ErrorKind::Numerical,
        }
    }

    /// Short machine-readable tag.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::NonFinite(_) => "non_finite",
            Error::Invalid(_) => "invalid",
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::NonInjective(_) => "non_injective",
            Error::NormalizationDrift(_) => "normalization_drift",
            Error::NearPole { .. } => "near_pole",
            Error::NotNormal(_) => "not_normal",
            Error::Singular { .. } => "singular",
            Error::NoConvergence(_) => "no_convergence",
            Error::NegativeRate { .. } => "negative_rate",
            Error::Statistics(_) => "statistics",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
