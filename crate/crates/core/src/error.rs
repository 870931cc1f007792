use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the model (negative field, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A solver failed or produced results that do not pass their checks.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Malformed input data (CSV grids, ridge files, extraction failures).
    #[error("data error: {0}")]
    Data(String),

    #[error("optimizer did not converge: {0}")]
    Fit(Box<crate::fitting::FitFailure>),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) => 2,
            Error::Numerical(_) | Error::Fit(_) => 3,
            Error::Data(_) | Error::Io { .. } => 4,
        }
    }
}
