use thiserror::Error;

/// Errors surfaced by the library and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its contract (e.g. `p` outside `[0,1]`,
    /// reservoir capacity zero). The message names the offending field.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A domain precondition was violated (e.g. density of an empty sequence).
    #[error("domain error: {0}")]
    Domain(String),

    /// An estimate could not be formed (e.g. every trial was invalid).
    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
