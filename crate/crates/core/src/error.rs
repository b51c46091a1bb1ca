use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid structure: {0}")]
    Structure(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("label collision: `{0}` appears on both operands")]
    LabelCollision(String),

    #[error("arity mismatch: {0}")]
    Arity(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix integrity check failed: {0}")]
    Integrity(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("state is not contained in the declared EB span (residual {residual:.3e})")]
    NotInEbSpan { residual: f64 },

    #[error("coefficient row {0} is identically zero")]
    DegenerateRow(usize),

    #[error("projection cascade failed: {0}")]
    CascadeFailure(String),

    #[error("normal form unavailable: {0}")]
    NormalForm(String),

    #[error("degenerate normal form: {0}")]
    Degenerate(String),

    #[error("total dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
