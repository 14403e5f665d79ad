//! Process-level error classification. Every failure maps to one of the
//! documented exit codes: 2 for anything wrong with inputs, 3 for a run
//! that diverged, 4 for a lemma violation, 5 for a refused enumeration.

use std::fmt;
use std::io;
use std::path::PathBuf;

use spikesolve::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Io { path: PathBuf, source: io::Error },
    Parse { path: PathBuf, line: Option<usize>, detail: String },
    Usage(String),
    Cap(String),
    Core(CoreError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{}: {}", path.display(), source),
            CliError::Parse { path, line: Some(line), detail } => {
                write!(f, "{}:{line}: {detail}", path.display())
            }
            CliError::Parse { path, line: None, detail } => {
                write!(f, "{}: {detail}", path.display())
            }
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Cap(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Cap(_) => 5,
            CliError::Core(e) => match e {
                CoreError::CascadeDivergence { .. } => 3,
                CoreError::EnumerationCap { .. } | CoreError::IterationCap { .. } => 5,
                CoreError::Dimension { .. }
                | CoreError::NonFinite { .. }
                | CoreError::Precondition { .. } => 2,
                _ => 1,
            },
        }
    }
}
