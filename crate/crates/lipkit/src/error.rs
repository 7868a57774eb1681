use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum LipkitError {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate functional: the Lipschitz norm is zero")]
    DegenerateFunctional,

    #[error("value out of range: {0}")]
    Range(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("contract violation in step output: property ({property}) failed: {detail}")]
    ContractViolation { property: char, detail: String },

    #[error("sampler exhausted: {0}")]
    SamplerExhausted(String),

    #[error("not uniformly convex: {0}")]
    NotUniformlyConvex(String),

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for LipkitError {
    fn from(e: serde_json::Error) -> Self {
        LipkitError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LipkitError>;
