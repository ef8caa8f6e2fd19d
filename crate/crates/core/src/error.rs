use thiserror::Error;

/// Errors raised by the laboratory.
///
/// The variants line up with how a run is scored: malformed inputs,
/// violated hypotheses (a claim that cannot be tested), infeasible
/// constructions, and solver breakdown are kept apart so that none of them
/// is mistaken for a contradicted claim.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("input error: {0}")]
    Input(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A hypothesis of the construction under test does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// No admissible construction satisfies the named inequality.
    #[error("infeasible: {inequality} ({detail})")]
    Infeasible { inequality: String, detail: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("solver diverged: {0}")]
    Divergence(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("config validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        LabError::Input(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        LabError::Shape(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        LabError::Precondition(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        LabError::Degenerate(msg.into())
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Parse(_) | LabError::Io(_) => 2,
            LabError::Divergence(_) => 4,
            _ => 3,
        }
    }
}
