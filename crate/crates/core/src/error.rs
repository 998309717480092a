use thiserror::Error;

/// Errors raised by the channel, region, scheme and search routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("variance `{name}` must be strictly positive, got {value}")]
    NonPositiveVariance { name: &'static str, value: f64 },

    #[error("average power must be strictly positive, got {0}")]
    NonPositivePower(f64),

    #[error("forward noise variance `{name}` must be finite, got {value}")]
    NonFiniteForwardVariance { name: &'static str, value: f64 },

    #[error("power split theta must lie in [0, 1], got {0}")]
    ThetaOutOfRange(f64),

    #[error("theta must be strictly positive for this transform")]
    ThetaZero,

    #[error("rate {r1} exceeds the single-user capacity {capacity} of receiver 1")]
    R1Infeasible { r1: f64, capacity: f64 },

    #[error("scheme parameter `{name}` is invalid: {value}")]
    InvalidScheme { name: &'static str, value: f64 },

    #[error("effective noise variance at receiver {receiver} is not positive ({value})")]
    NegativeEffectiveVariance { receiver: u8, value: f64 },

    #[error("feedback-phase power epsilon must lie in (0, {power}], got {epsilon}")]
    EpsilonOutOfRange { epsilon: f64, power: f64 },

    #[error("g(x) is only defined for x > 0, got {0}")]
    NonPositiveX(f64),

    #[error("boundary sampling needs at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid search budget: {0}")]
    InvalidBudget(String),

    #[error("Monte Carlo run needs at least one block")]
    NoBlocks,

    #[error("tolerance must be a positive number of standard errors, got {0}")]
    InvalidTolerance(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
