use alloc::string::String;

use crate::model::SettingPair;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("angle must be finite, got {0}")]
    NonFiniteAngle(f64),
    #[error("invalid spectrograph config: {0}")]
    InvalidConfig(&'static str),
    #[error("channel weights invalid: {0}")]
    InvalidWeights(String),
    #[error("probability {value} out of [0, 1] at {context}")]
    ProbabilityOutOfRange { value: f64, context: String },
    #[error("outcome probabilities for channel {channel}, pair {pair} sum to {sum}")]
    OutcomeSum {
        channel: usize,
        pair: SettingPair,
        sum: f64,
    },
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("hidden-variable value {lambda} outside [{min}, {max})")]
    LambdaOutOfRange { lambda: f64, min: f64, max: f64 },
    #[error("amplitude ratio r must be finite and >= 0, got {0}")]
    InvalidAmplitude(f64),
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
    #[error("invalid timing: {0}")]
    InvalidTiming(&'static str),
    #[error("coincidence window must be positive, got {0}")]
    InvalidWindow(f64),
    #[error("station {station} stream not sorted at index {index}")]
    UnsortedStream { station: char, index: usize },
    #[error("channel index {channel} >= channel count {channels}")]
    ChannelOutOfRange { channel: usize, channels: usize },
    #[error("grid resolution must be at least 8, got {0}")]
    GridTooCoarse(usize),
    #[error("emitted pair count N must be at least 1")]
    ZeroPairs,
    #[error("feature audit failed with {0} violation(s)")]
    AuditFailed(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("inconsistent singles: {0}")]
    InconsistentSingles(String),
}
