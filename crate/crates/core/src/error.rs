use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("input too short: {len} samples, kernel needs {kernel}")]
    InputTooShort { len: usize, kernel: usize },

    /// A backward pass was handed values inconsistent with its forward record.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Wfdb(#[from] WfdbError),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Errors raised while reading WFDB header and signal files.
#[derive(Debug, Error, PartialEq)]
pub enum WfdbError {
    #[error("line {line}: malformed record line: {reason}")]
    MalformedRecordLine { line: usize, reason: String },

    #[error("line {line}: malformed signal line: {reason}")]
    MalformedSignalLine { line: usize, reason: String },

    #[error("line {line}: unsupported signal format {format} (only format 16 is accepted)")]
    UnsupportedFormat { line: usize, format: u32 },

    #[error("header declares {declared} signals but lists {found}")]
    SignalCountMismatch { declared: usize, found: usize },

    #[error("signal data truncated: {len} bytes is not a whole number of {frame}-byte frames")]
    Truncated { len: usize, frame: usize },

    #[error("signal data holds {found} samples per signal, header declares {declared}")]
    TooFewSamples { declared: usize, found: usize },

    #[error("record lacks standard lead `{0}`")]
    MissingLead(String),

    #[error("header is empty")]
    Empty,
}

/// Errors raised while decoding the binary weight and dataset files.
#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: Vec<u8> },

    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),

    #[error("file truncated while reading {0}")]
    Truncated(String),

    #[error("array `{name}` has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("expected array `{expected}`, found `{found}`")]
    UnexpectedArray { expected: String, found: String },

    #[error("{0} trailing bytes after last entry")]
    TrailingBytes(usize),

    #[error("invalid field: {0}")]
    Invalid(String),
}
