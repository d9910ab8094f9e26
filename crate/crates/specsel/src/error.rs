use std::path::PathBuf;

/// Errors surfaced by the command-line front end, each tied to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("data error: {0}")]
    Data(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("all {0} splits failed")]
    AllSplitsFailed(usize),
    #[error("split failed: {0}")]
    SplitFailed(String),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) | CliError::Read { .. } => 2,
            CliError::Config(_) | CliError::Write { .. } => 3,
            CliError::AllSplitsFailed(_) | CliError::SplitFailed(_) => 4,
        }
    }

    pub(crate) fn write(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Write { path: path.into(), source }
    }
}

impl From<specsel_core::Error> for CliError {
    fn from(e: specsel_core::Error) -> Self {
        match e {
            specsel_core::Error::InvalidConfig(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
