use thiserror::Error;

/// Errors produced by problem construction, the iterative schemes, the
/// flow integrator and the diagnostics.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("invalid order p = {0}: must be an integer >= 2")]
    InvalidOrder(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A step-size or constant gate from a convergence theorem was violated
    /// at construction time.
    #[error("gate violated: {0}")]
    GateViolation(String),

    /// A non-finite value appeared while stepping. Carries the offending iterate.
    #[error("numerical failure at iteration {iteration}: {what}")]
    NumericalFailure {
        iteration: usize,
        what: String,
        iterate: Vec<f64>,
    },

    /// A Lyapunov or rate diagnostic needs data the objective does not provide.
    #[error("unsupported diagnostic: {0}")]
    UnsupportedDiagnostic(&'static str),

    #[error("y-oracle failure: {message} (residual {residual:e})")]
    OracleFailure { message: String, residual: f64 },

    /// Adaptive step size fell below the floor. `state` is the last accepted state.
    #[error("step size underflow at t = {t}")]
    Stiffness { t: f64, state: Vec<f64> },

    #[error("insufficient data: {points} usable points (need at least {needed})")]
    InsufficientData { points: usize, needed: usize },

    #[error("malformed trace: {0}")]
    MalformedTrace(String),
}

pub type Result<T> = std::result::Result<T, Error>;
