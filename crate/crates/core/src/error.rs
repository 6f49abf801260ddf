use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    #[error("buffer holds {found} elements but the shape needs {expected}")]
    BufferLength { expected: usize, found: usize },

    #[error("label {label} is outside the declared class count {num_classes}")]
    LabelOutOfRange { label: u16, num_classes: usize },

    #[error("unknown class id {class_id} (valid ids are 1..{num_classes})")]
    UnknownClass { class_id: usize, num_classes: usize },

    #[error("class vocabulary mismatch: {0}")]
    ClassVocabulary(String),

    #[error("field value {value} at index {index} is not allowed: {reason}")]
    InvalidValue {
        index: usize,
        value: f64,
        reason: &'static str,
    },

    #[error("malformed VGRID header: {0}")]
    MalformedHeader(String),

    #[error("dims has {dims} entries but spacing has {spacing}")]
    DimsSpacingMismatch { dims: usize, spacing: usize },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("payload has {extra} bytes beyond the {expected} the header declares")]
    ExcessPayload { expected: usize, extra: usize },

    #[error("malformed PGM: {0}")]
    MalformedPgm(String),

    #[error("unknown cl-X-Dice variant {0:?}")]
    UnknownVariant(String),

    #[error("variant is defined for {variant}D but the grid is {grid}D")]
    DimensionMismatch { variant: usize, grid: usize },

    #[error("normalized variant needs a shared r_max, got {pred} (prediction) and {reference} (reference)")]
    RmaxMismatch { pred: f64, reference: f64 },

    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),

    #[error("operation leaves the grid: {0}")]
    OutOfGrid(String),

    #[error("unknown branch {branch} (phantom has {count})")]
    UnknownBranch { branch: usize, count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
