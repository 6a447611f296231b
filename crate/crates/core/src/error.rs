use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite observation target {0}")]
    NonFiniteTarget(f64),

    /// The bordered Cholesky update needed more jitter than allowed.
    #[error("Gram matrix is numerically singular (required jitter {jitter:e})")]
    Singular { jitter: f64 },

    #[error("sampling distribution assigns mass {mass} to asleep action {action}")]
    MassOnAsleep { action: usize, mass: f64 },

    #[error("no awake (feasible) action")]
    NoFeasibleAction,

    #[error("player declared infeasibility at round {round}")]
    InfeasibilityDeclared { round: usize },

    #[error("context {0} outside the unit box")]
    ContextOutOfRange(String),

    #[error("feedback delivered without a pending action selection")]
    NoPendingSelection,

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("no feasible action for player {player} at a realized context")]
    NoFeasiblePolicy { player: usize },

    #[error("context schedule: {0}")]
    Schedule(String),
}
