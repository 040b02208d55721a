use thiserror::Error;

/// Errors raised by the solvers and numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the model or formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input, e.g. too few samples or mismatched lengths.
    #[error("invalid input: {0}")]
    Input(String),

    /// The requested switching task cannot be realised under its constraints.
    #[error("infeasible task: {0}")]
    Infeasible(String),

    /// The solver only treats the increasing-resistance orientation.
    #[error("unsupported switching direction: {0}")]
    UnsupportedDirection(String),

    /// The stationarity condition cannot be solved for the multiplier.
    #[error("singular control at t = {t}: d(rate)/dV vanishes")]
    SingularControl { t: f64 },

    #[error("no sign change on bracket [{lo}, {hi}]: g(lo) = {g_lo}, g(hi) = {g_hi}")]
    Bracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    /// Iterative solver exhausted its budget. `history` holds the last iterates.
    #[error("no convergence after {iterations} iterations (last iterates: {history:?})")]
    NoConvergence { iterations: usize, history: Vec<f64> },

    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
