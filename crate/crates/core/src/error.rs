use thiserror::Error;

/// Errors produced by the estimators and their supporting engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration value is unusable. `field` is a dotted path into the
    /// configuration document (e.g. `system.q` or `schedules.nSchedule`).
    #[error("configuration error at `{field}`: {message}")]
    Config { field: String, message: String },

    /// The exhaustive oracle refused an instance larger than its budget.
    #[error("oracle capacity exceeded: {0}")]
    Capacity(String),

    #[error("no jump in functional: value {lo_value:e} at s={lo}, {hi_value:e} at s={hi}")]
    NoJump {
        lo: f64,
        hi: f64,
        lo_value: f64,
        hi_value: f64,
    },

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
