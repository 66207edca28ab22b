use crate::role::Role;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("{role} reply failed to parse after {attempts} attempt(s): {reason}")]
    ParseFailure {
        role: Role,
        attempts: u32,
        reason: String,
        raw: String,
    },
    #[error("transcript has no entry for {role} request {key}")]
    TranscriptMiss { key: String, role: Role },
    #[error("template `{template}` needs slot `{slot}`")]
    MissingSlot { template: String, slot: String },
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl GatewayError {
    /// Errors that mean no model could be reached at all.
    pub fn is_unavailable(&self) -> bool {
        matches!(
            self,
            GatewayError::BackendUnavailable(_) | GatewayError::TranscriptMiss { .. } | GatewayError::Io(_)
        )
    }
}
