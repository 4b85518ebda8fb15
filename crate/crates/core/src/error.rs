use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("price {price:e} outside the no-arbitrage band ({lower:e}, {upper:e})")]
    Band { price: f64, lower: f64, upper: f64 },

    #[error("wing error: {0}")]
    Wing(String),

    #[error("strike {strike:e} is not in the asymptotic regime: {reason}")]
    NotAsymptotic { strike: f64, reason: String },

    #[error("regime error: {0}")]
    Regime(String),

    #[error("quadrature did not converge: achieved relative error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("non-integrable tail: {0}")]
    NonIntegrable(String),

    #[error("insufficient grid: {0}")]
    InsufficientGrid(String),

    #[error("non-positive value {value:e} at {at:e}")]
    NonPositive { at: f64, value: f64 },

    #[error("inconsistent with a pricing function: {0}")]
    Inconsistent(String),

    #[error("put-call parity violated at strike {strike:e}: deviation {deviation:e}")]
    Parity { strike: f64, deviation: f64 },

    #[error("negative measure weight {weight:e} at strike {strike:e} (expiry index {expiry})")]
    NegativeWeight { expiry: usize, strike: f64, weight: f64 },

    #[error("misaligned grids: {0}")]
    Misaligned(String),

    #[error("path {path} became non-finite at step {step}; {guidance}")]
    Instability { path: usize, step: usize, guidance: String },

    #[error("root finding failed: {0}")]
    NoConvergence(String),

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
