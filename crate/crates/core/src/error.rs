use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("network solve failed: {0}")]
    NetworkSolve(String),

    #[error("invalid PMU sample at t={t}: {reason}")]
    InvalidSample { t: f64, reason: String },

    #[error("degenerate estimate at t={t}: {reason}")]
    DegenerateEstimate { t: f64, reason: String },

    #[error("empty evaluation window [{start}, {end}]")]
    EmptyWindow { start: f64, end: f64 },

    #[error("exponential fit failed: {0}")]
    Fit(String),

    #[error("initialization did not converge: {0}")]
    Initialization(String),

    #[error("invalid scenario: {0}")]
    Invalid(crate::config::Diagnostics),

    #[error("config error in `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
