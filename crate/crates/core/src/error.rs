use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("no parseable records in corpus ({skipped} malformed lines skipped)")]
    EmptyCorpus { skipped: usize },

    #[error("cannot parse url {url:?}: {reason}")]
    UrlParse { url: String, reason: String },

    #[error("graph is empty")]
    EmptyGraph,

    #[error("node {0:?} is not covered by the partition")]
    Coverage(String),

    #[error("partitions are defined on different node sets")]
    NodeSetMismatch,

    #[error("score is undefined: {0}")]
    Undefined(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid document: {0}")]
    InvalidDocument(String),

    #[error("format error in {what}: {reason}")]
    Format { what: String, reason: String },

    #[error("stage {stage} failed on {}: {source}", path.display())]
    Stage {
        stage: &'static str,
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn format(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format { what: what.into(), reason: reason.into() }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::format("csv", e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::format("json", e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
