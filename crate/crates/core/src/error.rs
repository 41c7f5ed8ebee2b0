use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {0} lies outside [0, 1]")]
    Domain(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A hypothesis of the requested computation does not hold for the input.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("index {index} exceeds the trusted range (n_trusted = {trusted})")]
    Range { index: usize, trusted: usize },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("malformed coefficient file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by the caller's input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Unsupported(_)
                | Error::Precondition(_)
                | Error::Argument(_)
                | Error::Range { .. }
                | Error::Parse { .. }
        )
    }
}
