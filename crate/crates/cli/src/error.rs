/// Failures of a command, each mapped to a sysexits-style status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("dataset error: {0}")]
    Schema(String),
    #[error("dataset is empty")]
    EmptyInput,
    #[error("rule library: {0}")]
    Library(String),
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 64,
            CliError::Schema(_) | CliError::EmptyInput | CliError::Library(_) | CliError::MalformedTrace(_) => 65,
            CliError::Unavailable(_) => 69,
            CliError::Io(_) => 74,
        }
    }
}

pub(crate) fn io(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
