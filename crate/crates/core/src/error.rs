use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: material `{name}` is not in the material table")]
    UnresolvedMaterial {
        path: PathBuf,
        line: usize,
        name: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("decay is undefined for an all-zero signal")]
    UndefinedDecay,

    #[error("sample rate mismatch: impulse response at {rir} Hz, audio at {audio} Hz")]
    SampleRateMismatch { rir: u32, audio: u32 },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
