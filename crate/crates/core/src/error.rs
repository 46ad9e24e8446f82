use preictal_nn::NnError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdfError {
    #[error("malformed EDF header: {0}")]
    MalformedHeader(String),
    #[error("channel {requested:?} not found; available: {available:?}")]
    UnknownChannel {
        requested: String,
        available: Vec<String>,
    },
    #[error("EDF data truncated in data record {record} (expected {expected} records)")]
    Truncated { record: usize, expected: usize },
    #[error("signal {label:?} has degenerate digital range (digital min == digital max == {value})")]
    DegenerateScaling { label: String, value: i32 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Edf(#[from] EdfError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid record: {0}")]
    Record(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("no usable baseline: {0}")]
    BaselineUnavailable(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("cache file: {0}")]
    Cache(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
