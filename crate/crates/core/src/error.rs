use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// One rejected input row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: unexpected header {found:?}, expected {expected:?}", .path.display())]
    Header {
        path: PathBuf,
        found: String,
        expected: String,
    },

    #[error("{}: {} malformed row(s); first: {}", .path.display(), .rows.len(), .rows.first().map(|r| r.to_string()).unwrap_or_default())]
    MalformedRows { path: PathBuf, rows: Vec<RowError> },

    #[error("{}: duplicate key {key} on lines {first_line} and {second_line}", .path.display())]
    DuplicateKey {
        path: PathBuf,
        key: String,
        first_line: u64,
        second_line: u64,
    },

    #[error("integrity: {0}")]
    Integrity(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("invalid synthetic parameters: {0}")]
    SynthParams(String),

    #[error("researcher {researcher_id} has no staff years in period {period}; score undefined")]
    UndefinedScore {
        researcher_id: String,
        period: String,
    },

    #[error(
        "publication {pub_id} is cited but no baseline exists for ({year}, {subject_category})"
    )]
    MissingBaseline {
        pub_id: String,
        year: i32,
        subject_category: String,
    },

    #[error("empty field: {0}")]
    EmptyField(String),

    #[error("serialization: {0}")]
    Serialize(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 validation, 2 computation, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Header { .. }
            | Error::MalformedRows { .. }
            | Error::DuplicateKey { .. }
            | Error::Integrity(_)
            | Error::Config(_)
            | Error::SynthParams(_) => 1,
            Error::UndefinedScore { .. }
            | Error::MissingBaseline { .. }
            | Error::EmptyField(_)
            | Error::Serialize(_) => 2,
        }
    }
}
