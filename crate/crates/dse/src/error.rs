use std::path::PathBuf;

/// Location-tagged failure while reading a case file.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self { line, column, message: message.into() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] dse_core::Error),
    #[error("{source_name}: {error}")]
    Parse { source_name: String, error: ParseError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Config(String),
    #[error("{}: {message}", path.display())]
    ConfigFile { path: PathBuf, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{label}: {failed} of {trials} trials failed (limit 10%)")]
    TooManyFailures { label: String, failed: usize, trials: usize },
    #[error("reports are not comparable: {0}")]
    Mismatch(String),
    #[error("cannot replay: {0}")]
    Replay(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
