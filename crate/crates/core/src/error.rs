use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate calibration: g must differ from f")]
    DegenerateCalibration,
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("bad magic: not a SLCI measurement file")]
    BadMagic,
    #[error("unsupported measurement file version {0}")]
    UnsupportedVersion(u16),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("non-finite value encountered at iteration {iteration}")]
    Divergence { iteration: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
