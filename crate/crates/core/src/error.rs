use thiserror::Error;

/// Errors raised by state construction, gate application, measurement and protocol runs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("a state needs at least one mode")]
    NoModes,
    #[error("squeezing parameter must be finite and non-negative, got {0} (use the other axis)")]
    InvalidSqueezing(f64),
    #[error("mode {mode} out of range for a {n_modes}-mode state")]
    BadMode { mode: usize, n_modes: usize },
    #[error("gate acts on {expected} modes but {got} were given")]
    ArityMismatch { expected: usize, got: usize },
    #[error("mode {0} listed more than once")]
    RepeatedMode(usize),
    #[error("quadrature coefficients must not both vanish")]
    ZeroQuadrature,
    #[error("degenerate measurement: zero-variance quadrature (mean {expected}) forced to {forced}")]
    DegenerateMeasurement { expected: f64, forced: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("state is not pure (purity {0})")]
    NotPure(f64),
    #[error("state still carries unbounded-variance directions")]
    Improper,
    #[error("channel depends on measurement outcomes (deviation {0:e})")]
    NonDeterministicChannel(f64),
    #[error("protocol needs at least one step")]
    EmptyProtocol,
    #[error("non-finite parameter: {0}")]
    NonFinite(&'static str),
    #[error("forced outcome sequence exhausted at measurement {0}")]
    MissingOutcome(usize),
    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
