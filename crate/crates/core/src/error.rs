use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible contact angles: sum of squared cosines is {sum_cos2}, must be at most 1")]
    InfeasibleAngle { sum_cos2: f64 },

    #[error("degenerate direction: the contact part of the tangent is nonzero but the direction vector is zero")]
    DegenerateDirection,

    #[error("integration diverged; last finite state at t = {last_valid_time}")]
    Divergence { last_valid_time: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("wrong closed-form case: {0}")]
    WrongCase(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("inconsistent case: {0}")]
    InconsistentCase(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}
