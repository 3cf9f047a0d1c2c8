use thiserror::Error;

/// Errors raised while validating inputs or running a simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bound `{formula}` is undefined here: {reason}")]
    Domain { formula: &'static str, reason: String },

    #[error("malformed codebook file: {0}")]
    Parse(String),

    #[error("trial {trial} at grid point {point}: {source}")]
    Trial {
        point: usize,
        trial: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(formula: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            formula,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
