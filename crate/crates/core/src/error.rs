use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} index {index} out of range (limit {limit})")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("bellman iteration diverged after {sweeps} sweeps (residual {residual:e})")]
    Divergence { sweeps: usize, residual: f64 },

    #[error("non-positive fitness at state {state}: {detail}")]
    Positivity { state: usize, detail: String },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_index(what: &'static str, index: usize, limit: usize) -> Result<()> {
    if index < limit {
        Ok(())
    } else {
        Err(Error::Index { what, index, limit })
    }
}
