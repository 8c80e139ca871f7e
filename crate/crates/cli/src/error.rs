use std::path::Path;

/// Failure of a command, classified by the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("{}: {err}", path.display()))
    }

    pub(crate) fn usage(err: bloc_core::Error) -> Self {
        CliError::Usage(err.to_string())
    }
}

impl From<bloc_core::Error> for CliError {
    fn from(err: bloc_core::Error) -> Self {
        use bloc_core::Error as E;
        match err {
            E::InvalidData(_) | E::DimensionMismatch(_) | E::Empty(_) => CliError::Data(err.to_string()),
            E::InvalidParameter(_) | E::OutOfRange { .. } => CliError::Runtime(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
