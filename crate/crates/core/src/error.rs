use thiserror::Error;

/// Errors raised by the analytic, simulation and statistics layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ordering violation: expected {0}")]
    Ordering(String),

    #[error("degenerate interval [{lo}, {hi}]")]
    Degenerate { lo: f64, hi: f64 },

    #[error("quadrature did not reach tolerance on [{lo}, {hi}]: log value {log_value:.6e}, relative error estimate {rel_error:.3e}")]
    Quadrature { lo: f64, hi: f64, log_value: f64, rel_error: f64 },

    #[error("non-finite integrand value {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },

    #[error("step budget of {budget} exceeded at time {time:.6e}, state x = {x:.6e}")]
    StepBudget { budget: u64, time: f64, x: f64 },

    #[error("rejection budget of {budget} trials exceeded")]
    RejectionBudget { budget: u64 },

    #[error("empty sample: {0}")]
    EmptySample(String),
}

pub type Result<T> = std::result::Result<T, Error>;
