//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fiber Hessian not positive definite (eigenvalue {eig:.6e} at q={q:?}, p={p:?})")]
    NonConvexHamiltonian { q: Vec<f64>, p: Vec<f64>, eig: f64 },

    #[error("flow diverged: {0}")]
    FlowDivergence(String),

    #[error("Legendre solve did not converge (q={q:?}, v={v:?}, {iters} iterations)")]
    LegendreNoConvergence { q: Vec<f64>, v: Vec<f64>, iters: usize },

    #[error("energy drift {drift:.3e} exceeds cap {cap:.3e} over t={t}")]
    EnergyDriftExceeded { drift: f64, cap: f64, t: f64 },

    #[error("integrator step failure: {0}")]
    StepFailure(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("action minimization stalled: {0}")]
    ActionNoConvergence(String),

    #[error("time {0} exceeds the t <= 1 cap")]
    TimeTooLarge(f64),

    #[error("loop not closed: {0}")]
    LoopNotClosed(String),

    #[error("cloud is not a graph: {0}")]
    NotAGraph(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no breakdown in range: graph persists up to t = {t_hi}")]
    NoBreakdownInRange { t_hi: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code category: 2 config, 3 numeric/runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) => 2,
            _ => 3,
        }
    }
}
