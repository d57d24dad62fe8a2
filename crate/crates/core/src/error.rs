use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("record {index}: {message}")]
    Parse { index: usize, message: String },

    #[error("record {index}: missing required field `{field}`")]
    Schema { index: usize, field: String },

    #[error("requested {requested} dialogs but the corpus only has {available}")]
    InsufficientDialogs { requested: usize, available: usize },

    #[error("marker `{marker}` occurs inside {field}")]
    MarkerCollision { marker: String, field: String },

    #[error("malformed line: {0}")]
    MalformedLine(String),

    #[error("cannot score an empty corpus")]
    EmptyCorpus,

    #[error("unknown domain `{0}`")]
    UnknownDomain(String),

    #[error("dialog `{0}` has no goal annotation")]
    MissingGoal(String),

    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("need at least {required} paired samples, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("paired samples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("no item has two or more ratings")]
    NoPairableItems,

    #[error("{0} input is constant; rank correlation is undefined")]
    ConstantInput(&'static str),

    #[error("rating {0} is outside the 1..=5 scale")]
    ScaleViolation(f64),

    #[error("rating {value} is outside the declared scale [{min}, {max}]")]
    RatingOutOfBounds { value: f64, min: f64, max: f64 },

    #[error("outputs are misaligned: {0}")]
    MisalignedOutputs(String),

    #[error("only {0} overlapping instances; at least 3 are required")]
    InsufficientOverlap(usize),

    #[error("service unreachable at {endpoint}: {message}")]
    ServiceUnreachable { endpoint: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
