use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("initial datum does not match its sign tag: {0}")]
    SignMismatch(String),

    #[error("datum support radius {support} does not fit inside grid radius {radius}")]
    SupportExceedsGrid { support: f64, radius: f64 },

    #[error("time step {dt} violates the CFL bound {bound}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("non-finite state at t = {time:.6e}")]
    NonFinite { time: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no bracket found: {0}")]
    NoBracket(String),

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("window too short: {0}")]
    WindowTooShort(String),

    #[error("requested time {requested} lies beyond the horizon {horizon}")]
    BeyondHorizon { requested: f64, horizon: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
