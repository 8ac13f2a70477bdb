use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid needs at least 16 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("truncation radius must be positive and finite, got {0}")]
    BadRadius(f64),

    #[error("field has {got} samples but the grid has {expected} nodes")]
    GridMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{0}")]
    InvalidParams(String),

    #[error("tridiagonal solve broke down at row {row} (pivot {pivot:e})")]
    SolverBreakdown { row: usize, pivot: f64 },

    #[error("flow diverged: {0}")]
    Diverged(String),

    #[error("no converged {kind} solution among {starts} starts")]
    NoSolution { kind: &'static str, starts: usize },

    #[error("no shooting bracket for {0} interior zeros")]
    NoBracket(usize),

    #[error("{0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
