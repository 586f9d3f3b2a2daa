use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Invalid configuration or mismatched dimensions.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A potential or vector field produced a non-finite value.
    #[error("non-finite evaluation at q = {q:?}: {what}")]
    Evaluation { q: Vec<f64>, what: String },

    /// A requested derivative or jet order exceeds what is implemented.
    #[error("capability error: {0}")]
    Capability(String),

    /// The integrator produced a non-finite state.
    #[error("integration failure at t = {t}: state q = {q:?}, p = {p:?}")]
    Integration { t: f64, q: Vec<f64>, p: Vec<f64> },

    /// The step budget was exhausted.
    #[error("step budget exceeded: {needed} steps requested, budget {budget}")]
    Budget { needed: u64, budget: u64 },

    /// A boundary value solver did not converge.
    #[error("solver failure after {iterations} iterations: best residual {best_residual:e}")]
    Solver {
        iterations: usize,
        best_residual: f64,
        history: Vec<f64>,
    },

    /// Malformed or insufficient data for a fit.
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;
