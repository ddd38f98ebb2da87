use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("argument {index} = {value} outside domain [{lower}, {upper}] of primitive {primitive}")]
    ArgumentOutOfDomain {
        primitive: String,
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("argument vector length {got} does not match domain dimension {expected} of primitive {primitive}")]
    ArgumentDimension {
        primitive: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown primitive: {0}")]
    UnknownPrimitive(String),
    #[error("invalid domain: lower[{index}] = {lower} exceeds upper[{index}] = {upper}")]
    InvalidDomain {
        index: usize,
        lower: f64,
        upper: f64,
    },
    #[error("invalid stability envelope: {0}")]
    InvalidEnvelope(String),
    #[error("negative duration: {0}")]
    NegativeDuration(f64),
}
