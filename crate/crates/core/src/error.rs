use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or point outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid input geometry or grid.
    #[error("construction error: {0}")]
    Construction(String),

    /// The nearest-point predicate already fails at the smallest admissible
    /// depth along the inward normal.
    #[error("degenerate normal ray at arclength {s}: predicate false at t = {t}")]
    DegenerateRay { s: f64, t: f64 },

    #[error("inapplicable: {0}")]
    Inapplicable(String),

    /// Concave corners are outside the scope of the cornered identities.
    #[error("formula out of scope: {0}")]
    OutOfScope(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    /// `r ↦ A(r) r` could not be inverted at the requested magnitude.
    #[error("operator range error: cannot invert at {0}")]
    OperatorRange(f64),

    #[error("invalid ray: kappa * lambda = {0} exceeds 1")]
    InvalidRay(f64),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    /// `1 - d kappa` vanished along a ray.
    #[error("degenerate chart at depth {depth}: 1 - d*kappa = {jacobian}")]
    DegenerateChart { depth: f64, jacobian: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
