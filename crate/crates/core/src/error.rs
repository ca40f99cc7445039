use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("instance size must be at least 1")]
    ZeroSize,
    #[error("matching is not a bijection on 0..{n}")]
    NonBijection { n: usize },
    #[error("value {value} is outside {range}")]
    OutOfRange { value: f64, range: &'static str },
    #[error("invalid sample-size distribution: {0}")]
    InvalidDistribution(String),
    #[error("sample size {k} exceeds n = {n}")]
    SizeExceedsN { k: usize, n: usize },
    #[error("id {id} out of range for n = {n}")]
    IdOutOfRange { id: usize, n: usize },
    #[error("malformed sample: {0}")]
    MalformedSample(String),
    #[error("invalid recovery target: {0}")]
    InvalidTarget(String),
    #[error("unsupported history: {0}")]
    UnsupportedHistory(String),
    #[error("trial exceeded {cap} draws without recovery")]
    NonTerminating { cap: u64 },
    #[error("invalid Markov state ({alpha}, {beta}, {gamma}) for n = {n}")]
    InvalidState {
        alpha: usize,
        beta: usize,
        gamma: usize,
        n: usize,
    },
    #[error("target is unreachable: {0}")]
    Unrecoverable(String),
    #[error("self-loop probability {self_loop} too close to 1 at a non-absorbing state")]
    NumericalInstability { self_loop: f64 },
    #[error("target {r} exceeds n = {n}")]
    TargetExceedsN { r: usize, n: usize },
    #[error("n = {n} is below the minimum {min}")]
    TooSmallN { n: usize, min: usize },
    #[error("n = {n} exceeds the oracle limit {max}")]
    TooLargeN { n: usize, max: usize },
    #[error("distribution has no informative sample size for n = {n}")]
    EmptySupport { n: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
