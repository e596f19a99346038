use std::fmt;

use magnetic_core::Error;

/// Command failure, mapped onto the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// A check ran and did not hold.
    Verification(String),
    /// The configuration or input data was rejected.
    Invalid(String),
    Divergence { last_valid_time: f64 },
}

impl Failure {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Failure::Invalid(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Divergence { .. } => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Verification(msg) => write!(f, "verification failed: {msg}"),
            Failure::Invalid(msg) => write!(f, "{msg}"),
            Failure::Divergence { last_valid_time } => {
                write!(f, "integration diverged; last valid time {last_valid_time}")
            }
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { last_valid_time } => Failure::Divergence { last_valid_time },
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Invalid(format!("invalid config: {e}"))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Invalid(format!("i/o error: {e}"))
    }
}

pub type Outcome<T = ()> = std::result::Result<T, Failure>;
