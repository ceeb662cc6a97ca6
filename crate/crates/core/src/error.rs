use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-finite input at position {0}")]
    NonFiniteInput(usize),
    #[error("invalid genome: {0}")]
    InvalidGenome(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("oscillator state diverged")]
    BlowUp,
    #[error("empty input")]
    Empty,
    #[error("parent forward displacement {0} is not positive; fitness change is undefined")]
    NonPositiveParent(f64),
    #[error("genome does not match encoding {0}")]
    EncodingMismatch(&'static str),
}
