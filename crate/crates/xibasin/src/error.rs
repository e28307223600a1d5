use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("nonfinite operand")]
    NonfiniteOperand,
    #[error("simple pole")]
    SimplePole,
    #[error("gamma pole")]
    GammaPole,
    #[error("quadrature failure")]
    QuadratureFailure,
    #[error("invalid function spec: {0}")]
    InvalidSpec(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole evaluation")]
    PoleEvaluation,
    #[error("critical point")]
    CriticalPoint,
    #[error("delta exhaustion")]
    DeltaExhaustion,
    #[error("line-search stall")]
    LineSearchStall,
    #[error("ambiguous match")]
    AmbiguousMatch,
    #[error("grid spec mismatch")]
    GridMismatch,
    #[error("precision breach")]
    PrecisionBreach,
    #[error("boundary proximity")]
    BoundaryProximity,
    #[error("config error: {0}")]
    Config(String),
    #[error("gated: long-running")]
    Gated,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
