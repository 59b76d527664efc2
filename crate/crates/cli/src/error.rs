use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    /// Bad configuration; `path` names the offending field, e.g. `tolerances.eta`.
    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Pipeline(#[from] misspec::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl RunError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        RunError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn is_validation(&self) -> bool {
        match self {
            RunError::Config { .. } | RunError::Json(_) => true,
            RunError::Pipeline(e) => e.is_validation(),
            RunError::Io(_) | RunError::Csv(_) => false,
        }
    }

    /// Process exit code: 1 for bad input, 2 for failures inside a pipeline.
    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            1
        } else {
            2
        }
    }
}
