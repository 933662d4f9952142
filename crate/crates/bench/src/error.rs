use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment spec:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),

    #[error("could not parse spec: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] hgame_core::Error),

    #[error("{failed} of {total} runs failed")]
    RunsFailed { failed: usize, total: usize },
}

impl BenchError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        BenchError::Invalid(vec![msg.into()])
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Process exit code: 1 for bad input, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Invalid(_) | BenchError::Parse(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
