use std::io;

use crate::basemap::JournalId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    EmptyInput(&'static str),

    #[error("journal id {0} is not on the base map")]
    UnknownJournal(JournalId),

    #[error("invalid base map: {0}")]
    InvalidMap(String),

    #[error("base map is degenerate (diameter 0): disparity and diversity are undefined")]
    DegenerateMap,

    #[error("portfolio for {0:?} has no journals matched to the base map")]
    EmptyDistribution(String),

    #[error("Rao-Stirling value {0} is outside [0, 1)")]
    Domain(f64),

    #[error("matrix does not conform to the base map: {0}")]
    DimensionMismatch(String),

    #[error("need at least 2 units, found {0}")]
    TooFewUnits(usize),

    #[error("invalid label {label:?}: {reason}")]
    InvalidLabel { label: String, reason: &'static str },

    #[error("workspace is locked by another process ({0}); remove it if no other run is active")]
    Locked(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        match err.into_kind() {
            csv::ErrorKind::Io(e) => Error::Io(e),
            other => Error::Io(io::Error::other(format!("{other:?}"))),
        }
    }
}
