use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A standing assumption on the problem data is violated.
    #[error("invalid problem specification: {0}")]
    InvalidSpec(String),
    /// The request is outside the range that double precision supports.
    #[error("conditioning budget exceeded: {0}")]
    Conditioning(String),
    #[error("quadrature did not converge: {0}")]
    NonConvergent(String),
    #[error("non-finite integrand value at x = {x}")]
    NonFinite { x: f64 },
    #[error("singular linear system: {what} (condition estimate {condition:.3e})")]
    SingularSystem { what: String, condition: f64 },
    #[error("normalizing moment of dual row j = {row} vanishes ({value:.3e})")]
    NormalizationImpossible { row: usize, value: f64 },
    #[error("evaluation point {re} + {im}i is on the real axis")]
    OnRealAxis { re: f64, im: f64 },
}

impl Error {
    /// True for errors caused by the problem data rather than by numerics.
    pub fn is_spec_error(&self) -> bool {
        matches!(self, Error::InvalidSpec(_))
    }
}
