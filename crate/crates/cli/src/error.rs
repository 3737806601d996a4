use std::path::PathBuf;

use expfam_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// 2 for bad input, 3 for numerical failure, 4 for degenerate data.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Core(Error::DegenerateData(_)) => 4,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::input("x").exit_code(), 2);
        assert_eq!(CliError::Core(Error::Support("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(Error::NonNormalizable("x".into())).exit_code(), 3);
        assert_eq!(CliError::Core(Error::DegenerateData("x".into())).exit_code(), 4);
    }
}
