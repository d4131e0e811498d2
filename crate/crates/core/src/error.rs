use thiserror::Error;

/// Errors raised by the simulation, discretization and threshold toolkits.
#[derive(Debug, Error)]
pub enum ConfettiError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("point ({x}, {y}) is not covered by any leaf")]
    Uncovered { x: f64, y: f64 },

    #[error("probes still uncovered after {doublings} depth doublings (depth {depth})")]
    DeepeningExhausted { doublings: u32, depth: f64 },

    #[error("dimension mismatch: function has {expected} variables, measure has {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("infeasible size: {0}")]
    Infeasible(String),

    #[error("function is not monotone (not an up-set)")]
    NotMonotone,

    #[error("bisection start does not bracket the target: {0}")]
    Bracketing(String),

    #[error("coupling monotonicity violated: {0}")]
    MonotonicityViolation(String),

    #[error("crossing duality violated: {0}")]
    DualityViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ConfettiError {
    /// True for errors caused by a broken internal invariant rather than bad input.
    pub fn is_assertion(&self) -> bool {
        matches!(
            self,
            ConfettiError::MonotonicityViolation(_) | ConfettiError::DualityViolation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, ConfettiError>;
