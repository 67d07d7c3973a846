// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] multiview::Error),
    #[error("{}: no such file", .0.display())]
    MissingInput(PathBuf),
    #[error("{}: already exists (use --force to overwrite)", .0.display())]
    OutputExists(PathBuf),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::MissingInput(_) => "MISSING_INPUT",
            CliError::OutputExists(_) => "OUTPUT_EXISTS",
            CliError::Config(_) => "CONFIG",
            CliError::Usage(_) => "USAGE",
            CliError::Write { .. } => "IO",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}
