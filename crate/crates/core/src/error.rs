use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("precision unachievable: {0}")]
    Precision(String),
    #[error("budget exceeded: {what} needs {needed}, limit is {limit}")]
    Budget { what: String, needed: u64, limit: u64 },
    #[error("insufficient truncation: {0}")]
    Truncation(String),
    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
