use alloc::string::String;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid knob `{knob}`: {reason}")]
    InvalidKnob { knob: String, reason: String },
    #[error("duplicate knob name `{0}`")]
    DuplicateKnob(String),
    #[error("unknown knob `{0}`")]
    UnknownKnob(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("empty knob selection")]
    EmptySelection,
    #[error("covariance matrix is not positive definite even with jitter {jitter:e}")]
    Conditioning { jitter: f64 },
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("budget of {0} evaluations exhausted")]
    BudgetExhausted(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
