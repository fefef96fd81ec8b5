//! Error type shared by every module in the crate.
//!
//! Variants map one-to-one onto the failure classes surfaced by the CLI as
//! distinct exit codes, so nothing here should be collapsed into a catch-all.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller handed us a value outside the documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A rejection-sampled generator ran out of retry budget.
    #[error("generation failure: {0}")]
    GenerationFailure(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// On-disk artifact did not match its documented layout.
    #[error("format error: {0}")]
    Format(String),

    /// NaN / non-finite value or an ill-posed numeric operation.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Bad experiment configuration (unknown name, missing field, bad range).
    #[error("config error: {0}")]
    Config(String),

    /// Training loss blew past the divergence guard.
    #[error("training diverged: {0}")]
    Diverged(String),

    /// Masking removed every pixel, leaving nothing to score.
    #[error("degenerate mask: {0}")]
    DegenerateMask(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Stable process exit code for each failure class. 0/1 are left to the
    /// shell conventions (success / generic panic).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } => 3,
            Error::Format(_) => 4,
            Error::Numeric(_) => 5,
            Error::InvalidArgument(_) => 6,
            Error::GenerationFailure(_) => 7,
            Error::Diverged(_) => 8,
            Error::DegenerateMask(_) => 9,
        }
    }
}
