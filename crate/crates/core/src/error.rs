use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record could not be parsed. `line` is 1-based.
    #[error("{}:{line}: field `{field}`: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("length mismatch for {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("review `{0}` has no sentence left after filtering")]
    EmptyReview(String),

    #[error("review `{review_id}` is missing required field `{field}`")]
    MissingField {
        review_id: String,
        field: &'static str,
    },

    #[error("alpha is undefined: {0}")]
    UndefinedAlpha(String),

    #[error("alpha is degenerate: expected disagreement is zero (only one label class present)")]
    DegenerateAlpha,

    #[error("class {class} has {count} item(s), at least {min} required")]
    ClassTooSmall {
        class: String,
        count: usize,
        min: usize,
    },

    #[error("class {0} has no training samples, its weight is undefined")]
    ZeroCount(String),

    #[error("stance task is only defined on PRO/CON units, found NON at index {0}")]
    StanceOnNon(usize),

    #[error("at least 2 scores are required, got {0}")]
    NotEnoughScores(usize),

    #[error("review `{review_id}` lacks probabilities for sentence(s) {missing:?}")]
    MissingProbabilities {
        review_id: String,
        missing: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl Into<PathBuf>,
        line: usize,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}
