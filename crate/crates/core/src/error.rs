use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid problem class: {0}")]
    InvalidProblem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A hypothesis of the rate theorem is violated; `inequality` names it.
    #[error("parameter out of range: requires {inequality} (got {detail})")]
    OutOfRange { inequality: String, detail: String },

    #[error("method is outside the Nesterov family (beta = {beta}, gamma = {gamma})")]
    NotNesterovFamily { beta: f64, gamma: f64 },

    #[error("pole: {0}")]
    Pole(String),

    #[error("root solve did not converge: {0}")]
    RootNotConverged(String),

    #[error("continuation stalled at (r = {r}, s = {s}): {reason}")]
    ContinuationStall { r: f64, s: f64, reason: String },

    #[error("divergence at step {step}: {what}")]
    Divergence { step: usize, what: String },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code: 2 for parameter or validity failures, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidProblem(_)
            | Error::InvalidArgument(_)
            | Error::OutOfRange { .. }
            | Error::NotNesterovFamily { .. }
            | Error::Pole(_) => 2,
            Error::RootNotConverged(_)
            | Error::ContinuationStall { .. }
            | Error::Divergence { .. }
            | Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
