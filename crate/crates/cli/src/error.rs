use std::path::PathBuf;

use serde_json::json;
use stepbound::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for anything the user can fix in the configuration, 1 for numerical or I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Core(e) => match e {
                Error::Unsupported { .. }
                | Error::Structure(_)
                | Error::Parse { .. }
                | Error::InvalidSpec(_)
                | Error::M1Violated { .. }
                | Error::DiffusionNotSpd { .. }
                | Error::DegenerateElement { .. }
                | Error::NoDirichlet
                | Error::MissingBound(_)
                | Error::DimensionMismatch(_)
                | Error::InvalidArgument(_) => 2,
                _ => 1,
            },
            Self::Io { .. } => 1,
        }
    }

    /// One-line machine-readable record for stderr.
    pub fn record(&self) -> String {
        let kind = if self.exit_code() == 2 { "config" } else { "numerical" };
        let kind = if matches!(self, Self::Io { .. }) { "io" } else { kind };
        json!({"error": {"kind": kind, "code": self.exit_code(), "message": self.to_string()}}).to_string()
    }
}

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
