use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An integrand produced NaN or an infinity at a quadrature node or atom.
    #[error("integrand evaluated to {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },
    /// An argument fell outside the open domain of the operation.
    #[error("argument {value} outside of domain {domain}")]
    OutOfDomain { value: f64, domain: String },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// The operation is undefined for a point mass.
    #[error("operation undefined for a Dirac measure")]
    DiracInput,
    #[error("integral diverges: {0}")]
    Diverges(String),
    #[error("eigensolver failure: {0}")]
    EigFailure(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn out_of_domain(value: f64, domain: impl Into<String>) -> Error {
    Error::OutOfDomain { value, domain: domain.into() }
}
