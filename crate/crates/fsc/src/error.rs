//! Crate-wide error type.

use std::fmt;

/// Errors produced by construction, orthogonalization and simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Distribution or configuration parameters violate an invariant.
    InvalidParameters(String),
    /// Full tensor grids are limited to three random dimensions.
    DimensionTooLarge { dim: usize, max: usize },
    /// Eigenvalue iteration for a quadrature rule failed to converge.
    NumericalFailure(String),
    /// Two random functions live on different node sets.
    NodeSetMismatch,
    /// A raw function is linearly dependent on its predecessors.
    DegenerateFunction { index: usize },
    /// A leading covariance minor is numerically singular.
    SingularCovariance { order: usize },
    /// No analytic total-derivative chain is available at this order.
    ChainUnavailable { order: usize },
    /// A derivative, right-hand side or state value became NaN/Inf.
    NonFinite { what: &'static str, t: f64 },
    /// Fewer than two independent basis functions remain.
    BasisCollapse { t: f64 },
    /// Two moment series are defined on incompatible time grids.
    GridMismatch(String),
    /// Configuration file is malformed or inconsistent.
    Config(String),
    /// Output files could not be written.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameters(msg) => write!(f, "invalid parameters: {msg}"),
            Error::DimensionTooLarge { dim, max } => {
                write!(f, "tensor grid dimension {dim} exceeds {max}; use Monte Carlo nodes")
            }
            Error::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
            Error::NodeSetMismatch => write!(f, "random functions live on different node sets"),
            Error::DegenerateFunction { index } => {
                write!(f, "raw function {index} is linearly dependent on its predecessors")
            }
            Error::SingularCovariance { order } => {
                write!(f, "covariance minor of order {order} is numerically singular")
            }
            Error::ChainUnavailable { order } => {
                write!(f, "no derivative chain of order {order}; use the finite-difference path")
            }
            Error::NonFinite { what, t } => write!(f, "non-finite {what} at t = {t}"),
            Error::BasisCollapse { t } => {
                write!(f, "basis collapse at t = {t}: fewer than 2 independent functions")
            }
            Error::GridMismatch(msg) => write!(f, "time-grid mismatch: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
