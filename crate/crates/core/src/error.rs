use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QkdError {
    /// A projection left (almost) nothing of the input state.
    #[error("degenerate projection: post-projection weight {weight:e} is below {threshold:e}")]
    DegenerateProjection { weight: f64, threshold: f64 },

    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("phase {0} rad is not one of {{0, pi/2, pi, 3pi/2}}")]
    InvalidPhase(f64),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    /// R_raw is zero: no signal and no dark counts, so QBER and yields are undefined.
    #[error("degenerate channel: raw click rate is zero")]
    DegenerateChannel,

    #[error("key rate is still positive at the {0} km bracket limit")]
    BracketExceeded(f64),

    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, QkdError>;
