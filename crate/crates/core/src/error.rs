use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    EdgeList { line: usize, message: String },

    #[error("line {line}: self-loop on vertex `{label}`")]
    SelfLoop { line: usize, label: String },

    #[error("line {line}: duplicate edge `{u}`-`{v}`")]
    DuplicateEdge { line: usize, u: String, v: String },

    #[error("line {line}: edge weight must be a positive finite number, got `{token}`")]
    InvalidWeight { line: usize, token: String },

    #[error("edge list contains no edges")]
    EmptyGraph,

    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),

    #[error("graph is not connected")]
    Disconnected,

    #[error("graph boundary is empty; no Dirichlet data can be imposed")]
    EmptyBoundary,

    #[error("vertex {0} has no neighbours")]
    IsolatedVertex(usize),

    #[error("index {index} out of range (must be < {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("expression error at position {position}: {message}")]
    Expr { position: usize, message: String },

    #[error("unknown vertex attribute `{0}`")]
    UnknownAttribute(String),

    #[error("{role} function `{expr}` rejected: {reason}")]
    InvalidFunction {
        role: &'static str,
        expr: String,
        reason: String,
    },

    #[error("boundary data: {0}")]
    BoundaryData(String),

    #[error("field data: {0}")]
    FieldData(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("obstacle source must be nonnegative, vertex {vertex} has {value}")]
    NegativeSource { vertex: usize, value: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("problem file: {0}")]
    Problem(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
