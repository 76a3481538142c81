use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("restorer failed on utterance `{id}`: {message}")]
    Restore { id: String, message: String },

    #[error("utterance ids do not match (missing hypotheses: {missing_hyp:?}, unmatched hypotheses: {missing_ref:?}, duplicates: {duplicates:?})")]
    IdMismatch {
        missing_hyp: Vec<String>,
        missing_ref: Vec<String>,
        duplicates: Vec<String>,
    },

    #[error("duplicate utterance id `{0}`")]
    DuplicateId(String),

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("mode mismatch: {0}")]
    Mode(String),

    #[error("wrong architecture: {0}")]
    Architecture(String),

    #[error("invalid lattice: {0}")]
    Lattice(String),

    #[error("character {0:?} is not in the vocabulary")]
    OutOfVocabulary(char),

    #[error("training diverged at epoch {epoch} (last finite losses: {last_finite:?})")]
    Divergence { epoch: usize, last_finite: Vec<f64> },

    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
