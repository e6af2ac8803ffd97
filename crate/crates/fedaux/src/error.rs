use thiserror::Error;

/// Errors produced by the simulator.
///
/// The variants map onto the process exit codes used by the CLI:
/// `Config` -> 2, `Data`/`Io` -> 3, `NonFinite`/`Numerical` -> 4.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad shapes, bad hyperparameters, unknown names.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// A broken internal contract (mismatched lengths, stale caches).
    #[error("internal error: {0}")]
    Internal(String),

    /// Training produced a non-finite loss.
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },

    /// Non-finite loss, annotated with where in the protocol it happened.
    #[error("numerical failure at round {round}, station {station}: {detail}")]
    Numerical {
        round: usize,
        station: usize,
        detail: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
