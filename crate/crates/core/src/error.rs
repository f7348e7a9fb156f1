use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Problems with input data files.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: empty tag list")]
    EmptyTags { line: usize },
    #[error("line {line}: duplicate bookmark for user `{user}` on resource `{resource}`")]
    DuplicateBookmark {
        line: usize,
        user: String,
        resource: String,
    },
    #[error("line {line}: self-edge for `{user}`")]
    SelfEdge { line: usize, user: String },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: DataError,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid post: {0}")]
    InvalidPost(String),
    #[error("empty occurrence history")]
    EmptyHistory,
    #[error("occurrence at {time} is later than reference time {now}")]
    OccurrenceAfterNow { time: i64, now: i64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("unknown algorithm `{given}`; valid ids: {valid}")]
    UnknownAlgorithm { given: String, valid: String },
    #[error("content scoring requires at least one term of the current tweet")]
    MissingContent,
    #[error("empty corpus: {0}")]
    EmptyCorpus(&'static str),
    #[error("relevant set is empty")]
    EmptyRelevant,
    #[error("bin edges must be strictly increasing with at least two edges")]
    InvalidBinEdges,
    #[error("decay fit needs at least 3 bins with positive label and probability, got {usable}")]
    TooFewBins { usable: usize },
    #[error("no test cases to evaluate")]
    EmptyTestSet,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the contents of input data rather than by
    /// configuration.
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParameter { .. } | Error::UnknownAlgorithm { .. }
        )
    }
}
