use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("record carries no pre-annotated entities (pass-through recognizer)")]
    MissingAnnotations,

    #[error("invalid entity span {start}..{end} ({reason})")]
    InvalidSpan {
        start: usize,
        end: usize,
        reason: String,
    },

    #[error("invalid entity {0:?}: empty, padded, or contains a reserved token")]
    InvalidEntity(String),

    #[error("summary contains a reserved marker token")]
    InvalidSummary,

    #[error("no entity kinds enabled")]
    NoKinds,

    #[error("unknown entity kind {0:?}")]
    UnknownKind(String),

    #[error("document has no sentences")]
    EmptyDocument,

    #[error("n_max must be at least 1")]
    InvalidNMax,

    #[error("stream length mismatch: {left} predictions vs {right} references")]
    LengthMismatch { left: usize, right: usize },

    #[error("missing id {id:?} in {file}")]
    MissingId { id: String, file: String },

    #[error("duplicate id {id:?} in {file}")]
    DuplicateId { id: String, file: String },

    #[error("record {id:?} lacks required field {field:?}")]
    MissingField { id: String, field: &'static str },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("line {line}{}: {message}", id.as_deref().map(|i| format!(" (id {i:?})")).unwrap_or_default())]
    Record {
        line: usize,
        id: Option<String>,
        message: String,
    },

    #[error("{0}")]
    Failed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
