use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("game channel check failed ({clause}): {detail}")]
    GameChannel { clause: GameChannelClause, detail: String },

    #[error("enumeration budget exceeded: {needed} strategies > budget {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which condition of the game-channel definition failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameChannelClause {
    /// Winning rows do not split into per-receiver factors that depend only
    /// on the receiver's own question.
    Factorization,
    /// A winning sub-channel is not weakly symmetric.
    WeakSymmetry,
    /// Some losing input is not strictly noisier than every winning input.
    LessNoisy,
}

impl std::fmt::Display for GameChannelClause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GameChannelClause::Factorization => "factorization",
            GameChannelClause::WeakSymmetry => "weak symmetry",
            GameChannelClause::LessNoisy => "winning inputs less noisy",
        };
        f.write_str(s)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
