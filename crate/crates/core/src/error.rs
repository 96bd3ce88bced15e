use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by ingestion, indexing, and scoring.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported source format: {0} (expected .tex or .md)")]
    UnsupportedFormat(PathBuf),

    #[error("unresolved include `{path}` referenced from {from}")]
    MissingInclude { path: String, from: PathBuf },

    #[error("include cycle: {0}")]
    IncludeCycle(String),

    #[error("unbalanced environment `{env}` opened at line {line}")]
    UnbalancedEnvironment { env: String, line: usize },

    #[error("slice {index} has level {level}; levels must be >= 1")]
    InvalidLevel { index: usize, level: i64 },

    #[error("empty content tree")]
    EmptyTree,

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("package schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("slide/script count mismatch: {slides} slides vs {scripts} scripts")]
    CountMismatch { slides: usize, scripts: usize },

    #[error("invalid package: {0}")]
    Package(String),

    #[error("scorer `{scorer}` returned {value}, outside [0, 1]")]
    ScorerContract { scorer: String, value: f64 },

    #[error("empty deck: {0}")]
    EmptyDeck(&'static str),

    #[error("no run records")]
    NoRuns,

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed index file: {0}")]
    IndexFile(String),

    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by the filesystem rather than invalid input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Read { .. } | Error::Write { .. } | Error::Io(_))
    }
}
