use thiserror::Error;

/// Errors produced anywhere in the pipeline.
///
/// Variants are grouped so that callers (notably the CLI) can map them onto
/// stable exit codes with [`Error::kind`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on node {node} rejected")]
    SelfLoop { line: usize, node: usize },

    #[error("no edges")]
    NoEdges,

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("closed simple paths unsupported (source == target == {0})")]
    ClosedPath(usize),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid format: {0}")]
    Format(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Resource,
    Dimension,
    Internal,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. }
            | Error::SelfLoop { .. }
            | Error::NoEdges
            | Error::ClosedPath(_)
            | Error::Format(_)
            | Error::Invalid(_)
            | Error::Io(_)
            | Error::Json(_) => ErrorKind::Input,
            Error::ResourceCap(_) | Error::Overflow(_) => ErrorKind::Resource,
            Error::Dimension(_) => ErrorKind::Dimension,
            Error::Shape(_) | Error::Numeric(_) => ErrorKind::Internal,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
