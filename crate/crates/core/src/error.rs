use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates its precondition. `field` is the dotted path.
    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    /// Requested optical-spring frequency cannot be reached on the chosen branch.
    #[error("target {target_hz:.3} Hz outside achievable band ({min_hz:.3} Hz, {max_hz:.3} Hz]")]
    OutOfRange {
        target_hz: f64,
        min_hz: f64,
        max_hz: f64,
    },

    #[error("frequency grid invalid: {0}")]
    Grid(String),

    #[error("axis mismatch: {0}")]
    AxisMismatch(String),

    #[error("unstable configuration: {0}")]
    Unstable(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by physically unreachable targets.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::OutOfRange { .. } | Error::Unstable(_))
    }
}
