use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed archive header: {0}")]
    MalformedHeader(String),

    #[error("tensor data ranges overlap or exceed the file: {0}")]
    OffsetOverlap(String),

    #[error("unsupported dtype {0:?}")]
    UnsupportedDtype(String),

    #[error("invalid tensor {name:?}: {detail}")]
    InvalidTensor { name: String, detail: String },

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema mismatch at {name:?}: {detail}")]
    SchemaMismatch { name: String, detail: String },

    #[error("matrix contains non-finite entries")]
    NonFiniteInput,

    #[error("spectrum is numerically zero")]
    AllZeroSpectrum,

    #[error("split index {k} outside 1..={r}")]
    IndexOutOfRange { k: usize, r: usize },

    #[error("{what} = {value} is outside its valid range")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("SVD failed to converge after {0} iterations")]
    ConvergenceFailure(usize),

    #[error("candidate pool is empty")]
    EmptyPool,

    #[error("invalid candidate pool: {0}")]
    InvalidPool(String),

    #[error("task vectors at {name:?} are antipodal (cos = {cos})")]
    DegenerateAngle { name: String, cos: f64 },

    #[error("cannot detect block structure: {0}")]
    UnknownBlockStructure(String),

    #[error("evaluator failed on [{ids}]: {detail}")]
    EvaluatorFailure { ids: String, detail: String },

    #[error("sample counts differ: {left} vs {right}")]
    SampleCountMismatch { left: usize, right: usize },

    #[error("report serialization failed: {0}")]
    Serialization(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("layer {name:?}: {source}")]
    Layer {
        name: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// The innermost error, looking through [`Error::Layer`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Layer { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn mismatch(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::SchemaMismatch {
            name: name.into(),
            detail: detail.into(),
        }
    }
}
