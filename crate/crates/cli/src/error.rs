use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] pillar_gp::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {err}", path.display()))
    }

    pub fn in_stream(stream: &str, err: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("stream {stream:?}: {err}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
