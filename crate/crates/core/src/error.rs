use thiserror::Error;

/// Errors raised by the game solvers and the experiment engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite state encountered at stage {stage}")]
    Divergence { stage: usize },

    #[error("non-finite derivative while approximating stage {stage}")]
    Evaluation { stage: usize },

    #[error("stage {stage}: Nash stage system is singular (condition estimate {condition:.3e})")]
    EquilibriumExistence { stage: usize, condition: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("forward solve did not converge: {0}")]
    NotConverged(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GameError {
    fn from(e: std::io::Error) -> Self {
        GameError::Io(e.to_string())
    }
}

impl From<csv::Error> for GameError {
    fn from(e: csv::Error) -> Self {
        GameError::Io(e.to_string())
    }
}

pub type Result<T, E = GameError> = std::result::Result<T, E>;
