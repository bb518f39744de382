use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A process or ensemble parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// An argument is outside the domain of the operation (empty input, zero length, odd k, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// An exact enumeration would exceed its budget.
    #[error("enumeration budget exceeded: {what} needs {needed} items, budget is {budget}")]
    Resource {
        what: String,
        needed: u128,
        budget: u128,
    },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// The exact Wick oracle only applies to jointly Gaussian diagonals.
    #[error("exact oracle unsupported for non-Gaussian process {0}")]
    UnsupportedOracle(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
