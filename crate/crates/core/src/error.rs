use thiserror::Error;

/// Errors produced by the samplers, oracles and probability kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Row and column margins do not describe a valid instance.
    #[error("invalid margins: {0}")]
    InvalidMargins(String),

    /// The instance admits no table (for example a binary column sum larger
    /// than its number of open cells).
    #[error("infeasible instance: {0}")]
    Infeasible(String),

    /// A conditional law was requested on an event of probability zero.
    #[error("conditioning on an event of probability zero: {0}")]
    ConditioningImpossible(String),

    /// Constraint propagation found a partial table with no completion.
    #[error("contradiction: {0}")]
    Contradiction(String),

    /// Both choices for a bit have zero weight, or the restart budget ran out.
    #[error("dead state: {0}")]
    DeadState(String),

    /// An exact oracle was asked for an instance above its configured size.
    #[error("oracle limit exceeded: {0}")]
    LimitExceeded(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that signal an unsalvageable partial state.
    pub fn is_dead_state(&self) -> bool {
        matches!(self, Error::DeadState(_) | Error::Contradiction(_))
    }
}
