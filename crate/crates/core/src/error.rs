use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A requested size cannot be represented or is zero where a positive size is required.
    #[error("size error: {0}")]
    Size(String),

    /// A parameter violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operand shapes do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A numerical routine failed or produced a result whose residual is too large.
    #[error("numerical error: {what} (residual {residual:.3e})")]
    Numerical { what: String, residual: f64 },

    /// Storage required by an operation exceeds the configured memory budget.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A power cache was used with a GFT matrix other than the one it was built from.
    #[error("power cache fingerprint {cache:#018x} does not match GFT matrix fingerprint {matrix:#018x}")]
    StaleCache { cache: u64, matrix: u64 },

    /// The optimizer encountered a non-finite loss or gradient.
    #[error("optimizer error at epoch {epoch}, parameter {index}: {what}")]
    Optimizer {
        epoch: usize,
        index: usize,
        what: String,
    },

    /// A metric is undefined for the given inputs (e.g. NMSE against an all-zero reference).
    #[error("undefined metric: {0}")]
    Undefined(String),
}

impl Error {
    pub(crate) fn numerical(what: impl Into<String>, residual: f64) -> Self {
        Error::Numerical {
            what: what.into(),
            residual,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
