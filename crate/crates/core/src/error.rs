use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid reward: {0}")]
    InvalidReward(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{count} deterministic policies exceed the enumeration cap {cap}; use sampled search instead")]
    CapExceeded { count: u128, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal numerical error: {0}")]
    Numerical(String),

    #[error("model failed on reward `{id}`: {source}")]
    Model {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad inputs rather than by a failing computation.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Shape(_)
            | Error::InvalidMdp(_)
            | Error::InvalidReward(_)
            | Error::InvalidPolicy(_)
            | Error::InvalidArgument(_)
            | Error::Json(_) => true,
            Error::Model { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
