use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Structural problem in an input file. `offset` is a byte offset for
    /// binary files and a 1-based line number for text files.
    #[error("{}: {what} at {unit} {offset}: {message}", path.display(), unit = if *.binary { "byte" } else { "line" })]
    Format {
        path: PathBuf,
        what: &'static str,
        offset: u64,
        binary: bool,
        message: String,
    },

    #[error("non-finite feature value at row {row}, col {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("label {label} at position {index} is out of range for {num_classes} classes")]
    LabelOutOfRange {
        index: usize,
        label: i64,
        num_classes: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("class {class} has {available} samples, {required} required (short by {})", required - available)]
    InsufficientSamples {
        class: usize,
        available: usize,
        required: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Cholesky factorization failed (last jitter tried {jitter:e})")]
    Factorization { jitter: f64 },

    #[error("Newton iteration did not converge in {iterations} iterations (last objective change {last_delta:e})")]
    NonConvergence { iterations: usize, last_delta: f64 },

    #[error("every hyperparameter grid point failed ({attempted} attempted)")]
    GridExhausted { attempted: usize },

    #[error("expert {index}: {source}")]
    Expert {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fusion needs at least one child")]
    EmptyFusion,

    #[error("child {index} has non-positive variance {variance}")]
    NonPositiveVariance { index: usize, variance: f64 },

    #[error("fusion tree: {0}")]
    Tree(String),

    #[error("inconsistent predictions: {0}")]
    Inconsistent(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("model container: {0}")]
    Model(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn expert(index: usize, source: Error) -> Self {
        Error::Expert {
            index,
            source: Box::new(source),
        }
    }
}
