use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} {value} out of range (must be < {bound})")]
    OutOfRange {
        what: &'static str,
        value: u64,
        bound: u64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("{base}^{exp} overflows u64")]
    Overflow { base: u64, exp: u32 },

    #[error("fanout b = {b} outside the cost-model domain [2, n/2] for n = {n}")]
    Domain { n: f64, b: f64 },

    #[error("link-distance pmf is empty: a single community has no inter-community links")]
    EmptyPmf,

    #[error("no root in (1, {upper}]: {reason}")]
    NoRoot { upper: f64, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("graph has {communities} communities; oracle is limited to {limit}")]
    TooLarge { communities: u64, limit: u64 },

    #[error("graph parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
