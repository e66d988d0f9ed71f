use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown session {0:?}")]
    UnknownSession(String),

    #[error("unknown question {0:?}")]
    UnknownQuestion(String),

    #[error("invalid verdict {0:?} (expected Left, Right, Both or Neither)")]
    InvalidVerdict(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("{}:{line}: corrupt journal entry: {message}", path.display())]
    Journal {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] qa_core::Error),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }
}
