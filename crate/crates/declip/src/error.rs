use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] declip_core::Error),
    #[error("{path}: {source}")]
    Wav { path: PathBuf, source: hound::Error },
    #[error("{path}: unsupported sample format ({detail}); expected 16-bit PCM or 32-bit float")]
    UnsupportedFormat { path: PathBuf, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("config {path}: {source}")]
    Config { path: PathBuf, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("restored signal is not consistent with the input: {0}")]
    Inconsistent(String),
}
