use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An algorithm configuration is inconsistent with the chosen method.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A runtime invariant (virtual-sequence identity, shift averaging,
    /// finiteness) did not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("no unique optimum: {0}")]
    NoUniqueOptimum(String),

    /// Rate fitting was asked to fit a window containing nonpositive gaps.
    #[error("not in linear regime: {0}")]
    NotLinearRegime(String),

    /// The requested analysis does not exist for this method/objective class.
    #[error("unavailable: {0}")]
    Unavailable(String),

    #[error("{location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input (as opposed to a failed run).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::Config(_) | Error::Parse { .. } | Error::Unavailable(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
