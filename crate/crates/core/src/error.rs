use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{source_name}:{line}: duplicate {kind} '{id}'")]
    Duplicate {
        source_name: String,
        line: usize,
        kind: &'static str,
        id: String,
    },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("build failed: {0}")]
    Build(String),

    #[error("quality gate failed: {0}")]
    GateFailed(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }
}
