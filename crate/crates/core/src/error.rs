use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {field}: {message}")]
    Config { field: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver did not converge after {iterations} iterations (primal {primal:.3e}, dual {dual:.3e})")]
    NonConvergence {
        iterations: usize,
        primal: f64,
        dual: f64,
    },

    #[error("problem appears infeasible after {iterations} iterations (primal residual {primal:.3e})")]
    Infeasible { iterations: usize, primal: f64 },

    #[error("SDR requested for N = {n} elements, above the cap of {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn shape(what: &str, expected: usize, got: usize) -> Self {
        Error::Shape(format!("{what}: expected length {expected}, got {got}"))
    }
}
