use std::path::Path;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] clickstat_core::Error),
    #[error("io-error: {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse-error: {0}")]
    Parse(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn parse(msg: impl std::fmt::Display) -> Self {
        CliError::Parse(msg.to_string())
    }

    /// The message on one line, for diagnostics.
    pub fn single_line(&self) -> String {
        self.to_string().split_whitespace().collect::<Vec<_>>().join(" ")
    }
}
