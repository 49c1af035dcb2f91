use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("operation requires discrete distributions")]
    NonDiscrete,

    #[error("enumeration of {states} states exceeds the cap of {cap}")]
    TooLarge { states: u128, cap: u128 },

    #[error("mechanism {mechanism} does not support a market with {sellers} seller(s) and {buyers} buyer(s)")]
    UnsupportedMarket {
        mechanism: String,
        sellers: usize,
        buyers: usize,
    },

    #[error("unknown mechanism `{0}`")]
    UnknownMechanism(String),

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error("unknown parameter `{param}` for check `{check}`")]
    UnknownParam { check: String, param: String },

    #[error("could not parse `{token}`: {reason}")]
    Parse { token: String, reason: String },
}

impl Error {
    pub fn parse(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            token: token.into(),
            reason: reason.into(),
        }
    }
}
