use std::path::PathBuf;

use crate::backends::BackendError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const BACKEND: i32 = 3;
    pub const VALIDATION: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] lfa_core::Error),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("trial `{trial}`: {source}")]
    Trial {
        trial: String,
        #[source]
        source: Box<Error>,
    },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("utterance `{0}` has no audio reference")]
    MissingAudio(String),
    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(e) => match e {
                lfa_core::Error::Unsatisfiable(_) | lfa_core::Error::UnknownConversation(_) => exit::VALIDATION,
                lfa_core::Error::IrreparableOutput(_) => exit::BACKEND,
                _ => exit::CONFIG,
            },
            Self::Parse { .. } | Self::Config(_) | Self::Locked(_) => exit::CONFIG,
            Self::Io { .. } => exit::FAILURE,
            Self::Backend(_) => exit::BACKEND,
            Self::Trial { source, .. } => source.exit_code(),
            Self::Validation(_) | Self::MissingAudio(_) => exit::VALIDATION,
        }
    }

    /// Short machine-readable error class.
    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            exit::CONFIG => "config",
            exit::BACKEND => "backend",
            exit::VALIDATION => "validation",
            _ => "failure",
        }
    }
}
