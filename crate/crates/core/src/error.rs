use thiserror::Error;

/// Errors raised anywhere in the reduction pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KstError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("base gamma = {gamma} violates gamma >= 2n+2 = {required} for n = {n}")]
    BaseTooSmall { gamma: u64, n: usize, required: u64 },

    #[error(
        "inner function not strictly increasing between nodes {left} and {right}: \
         psi = {left_value:e} then {right_value:e}"
    )]
    NotMonotone {
        left: usize,
        right: usize,
        left_value: f64,
        right_value: f64,
    },

    #[error("derivative order {order} unsupported (allowed {min}..={max})")]
    UnsupportedOrder { order: usize, min: usize, max: usize },

    #[error("value {value} outside the valid range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("partition index k = {k} exceeds order m = {m}")]
    PartitionOrder { m: usize, k: usize },

    #[error("singular change of variables at z = {z}: psi'(x1 = {x1}) = {slope:e}")]
    SingularJacobian { z: f64, x1: f64, slope: f64 },

    #[error("leading coefficient c2 vanishes at z = {z}")]
    SingularSystem { z: f64 },

    #[error("boundary bracket at the {side} end is {value:e}; condition is vacuous")]
    DegenerateBoundary { side: &'static str, value: f64 },

    #[error("singular Newton matrix: zero pivot in column {pivot}")]
    SingularMatrix { pivot: usize },

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("no solved slice for row x2 = {x2}")]
    MissingSlice { x2: f64 },
}

pub type Result<T> = std::result::Result<T, KstError>;
