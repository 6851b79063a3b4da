use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value failed validation. `key` is the dotted config key.
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },

    /// Adaptive quadrature ran out of subdivisions before meeting the tolerance.
    #[error("quadrature did not converge: partial value {partial}, achieved error {achieved_err:e} (requested {requested:e})")]
    Quadrature {
        partial: f64,
        achieved_err: f64,
        requested: f64,
    },

    /// Conditional (DF) Monte Carlo saw no trial in which the relay decoded the weak user's symbol.
    #[error("no accepted trials out of {trials}: relay never decodes the weak user's symbol")]
    NoAcceptance { trials: u64 },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
