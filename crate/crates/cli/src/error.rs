use std::path::Path;

/// Failures surfaced by the command-line tool, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),

    #[error("{0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(medfilter::Error),
}

impl CliError {
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    /// 1 for input, output and configuration problems, 2 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<medfilter::Error> for CliError {
    fn from(e: medfilter::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
