//! Input documents, verification suites and report emission for the
//! `cr-orient` binary.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a
//! computation cannot be completed, 2 for unreadable or malformed input and
//! rejected configurations.

pub mod commands;
pub mod diagnostics;
pub mod schema;
pub mod suite;

use diagnostics::Diagnostic;

/// Version tag required at the top of every input and output document.
pub const SCHEMA: &str = "cr-orient/1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{} schema error(s):\n{}", .0.len(), render(.0))]
    Schema(Vec<Diagnostic>),
    #[error("configuration rejected: {0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] cr_orient::Error),
}

fn render(d: &[Diagnostic]) -> String {
    d.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => 1,
            _ => 2,
        }
    }
}
