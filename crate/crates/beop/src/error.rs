use std::fmt::Display;

/// Failure of a command, classified by process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent input (exit code 2).
    #[error("invalid input: {0:#}")]
    Input(anyhow::Error),
    /// Anything else (exit code 4).
    #[error("internal error: {0:#}")]
    Internal(anyhow::Error),
}

impl CliError {
    pub fn input(msg: impl Display) -> Self {
        CliError::Input(anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Internal(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags an error as bad input, with context.
pub trait InputContext<T> {
    fn input(self, context: impl Display) -> CliResult<T>;
}

impl<T, E> InputContext<T> for Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn input(self, context: impl Display) -> CliResult<T> {
        self.map_err(|e| CliError::Input(e.into().context(context.to_string())))
    }
}
