use thiserror::Error;

/// Operational errors surfaced by the engine, models and optimizer.
///
/// Numeric domain violations in the scalar special functions panic instead;
/// they indicate caller bugs, not recoverable conditions.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("sample budget {budget} cannot cover the minimum allocation {required}")]
    BudgetInfeasible { budget: f64, required: f64 },

    #[error("no legal moves available")]
    NoLegalMoves,

    #[error("estimation error: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
