use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A mark-law MGF was evaluated at or beyond the edge of its domain.
    #[error("mgf argument {s} is outside the domain (must be < {sup})")]
    Domain { s: f64, sup: f64 },

    #[error("moment order {0} is not in 1..=4")]
    InvalidOrder(u32),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// `1 - ||alpha||_1 E[l]` is not positive.
    #[error("unstable parameters: stability margin {margin} <= 0")]
    Stability { margin: f64 },

    #[error("intensity overflow at step {step} (lambda = {lambda})")]
    Resource { step: usize, lambda: f64 },

    #[error("stored intensity disagrees with replay at step {step}: stored {stored}, replayed {replayed}")]
    Consistency { step: usize, stored: f64, replayed: f64 },

    /// The finite-horizon recursion left the MGF domain; the expectation is infinite.
    #[error("theta = {theta} is too large: recursion step {step} left the mgf domain")]
    TiltTooLarge { theta: f64, step: usize },

    #[error("theta = {theta} exceeds the critical value {theta_c}")]
    ThetaAboveCritical { theta: f64, theta_c: f64 },

    #[error("theta = {theta} is at the critical value {theta_c}; the slope diverges")]
    ThetaAtCritical { theta: f64, theta_c: f64 },

    #[error("no sign change found for {what}")]
    NoBracket { what: String },

    #[error("estimator degenerate: {0}")]
    EstimatorDegenerate(String),

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
