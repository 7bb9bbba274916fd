use thiserror::Error;

/// Errors raised across the framework.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("environment: {0}")]
    Env(String),

    #[error("invalid sharing weights: {0}")]
    Weights(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("oracle: {0}")]
    Oracle(String),

    #[error("replay: {0}")]
    Replay(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}
