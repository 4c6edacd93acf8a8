use std::path::PathBuf;

/// Every failure the front end reports; [`CliError::exit_code`] maps each to the process status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("admissibility exhausted: {found} admissible samples in {draws} draws, need at least {needed}")]
    Exhausted { found: usize, draws: usize, needed: usize },
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

impl CliError {
    pub fn schema(path: impl Into<String>, message: impl ToString) -> Self {
        Self::Schema { path: path.into(), message: message.to_string() }
    }

    /// 2 for malformed input or options, 3 when sampling runs dry, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Read { .. } | Self::Write { .. } | Self::Schema { .. } | Self::Usage(_) => 2,
            Self::Exhausted { .. } => 3,
            Self::Evaluation(_) => 1,
        }
    }
}
