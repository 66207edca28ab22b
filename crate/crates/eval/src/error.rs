#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AtomError {
    #[error("unknown atom `{0}`")]
    Unknown(String),
    #[error("inconsistent state: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("step {step}: precondition violated: {reason}")]
    PreconditionViolated { step: usize, reason: String },
    #[error("step {step}: unknown action `{text}`")]
    UnknownAction { step: usize, text: String },
    #[error("step {step}: unknown block `{block}`")]
    UnknownBlock { step: usize, block: String },
}

impl ExecError {
    pub fn step(&self) -> usize {
        match self {
            ExecError::PreconditionViolated { step, .. }
            | ExecError::UnknownAction { step, .. }
            | ExecError::UnknownBlock { step, .. } => *step,
        }
    }
}
