use std::io;
use std::path::PathBuf;

use myopic_core::model::Violation;

/// Everything that makes a command fail before it can report results.
/// All of these map to exit status 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}", path = .path.display())]
    Read { path: PathBuf, source: io::Error },

    #[error("cannot write {path}: {source}", path = .path.display())]
    Write { path: PathBuf, source: io::Error },

    #[error("{path}: malformed model file: {source}", path = .path.display())]
    Parse { path: PathBuf, source: serde_json::Error },

    #[error("malformed model: {0}")]
    Shape(String),

    #[error("model {name} is invalid:\n{}", list(.violations))]
    Invalid { name: String, violations: Vec<Violation> },

    #[error("bad argument: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] myopic_core::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n")
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
