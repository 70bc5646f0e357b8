use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: parse error at line {line}, column {column}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, column: usize, message: String },

    #[error("unsupported scenario schema {0} (supported: 1)")]
    Schema(u32),

    #[error("task {task}: unknown operation {op:?}")]
    UnknownOperation { task: usize, op: String },

    #[error("task {task} ({op}): {message}")]
    Binding { task: usize, op: String, message: String },

    #[error("task {task} ({op}): {source}")]
    Task {
        task: usize,
        op: String,
        #[source]
        source: qsimul_core::Error,
    },

    #[error("object {name:?}: {message}")]
    Object { name: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] qsimul_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Exit status for errors that stop a run before verdicts exist.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
