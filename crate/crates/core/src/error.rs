//! Error types shared across the crate.

/// Errors produced by calibration, protocol execution, and auditing.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A parameter was outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A transcript contained a message that no honest execution can produce.
    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),

    /// The amplification-by-shuffling bound does not apply: the local privacy
    /// parameter exceeds the validity gate `eps_l <= ln(n / (16 ln(2/delta)))`.
    #[error("amplification invalid: {reason} (validity gate eps_l <= {gate})")]
    AmplificationInvalid { gate: f64, reason: String },

    /// A sample-size search failed to converge.
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// A truncated pmf omits more tail mass than the certified budget.
    #[error("pmf truncation leaves tail mass {tail_mass:.3e}, budget {budget:.3e}")]
    Truncation { tail_mass: f64, budget: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
