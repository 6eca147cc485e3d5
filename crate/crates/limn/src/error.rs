//! Crate-wide error type.
//!
//! Variants group into three exit-code categories used by the CLI:
//! validation problems (bad inputs or configuration), fit failures, and
//! dataset / filesystem I/O problems.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate sweep: {0}")]
    DegenerateSweep(String),

    #[error("degenerate design matrix: rank {rank} < {cols} columns")]
    DegenerateDesign { rank: usize, cols: usize },

    #[error("fit failure: {message} (best residual rms {residual_rms:e})")]
    FitFailure { message: String, residual_rms: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("stage `{stage}` is missing its upstream artifact; run stage `{missing}` first")]
    MissingDependency { stage: String, missing: String },

    #[error("config hash mismatch in {path}: artifact was produced by {found}, current config is {expected} (pass --override-hash to force)")]
    HashMismatch {
        path: String,
        found: String,
        expected: String,
    },

    #[error("unsupported dataset format version {found} (this build reads {supported})")]
    VersionMismatch { found: String, supported: String },

    #[error("malformed dataset header: {0}")]
    MalformedHeader(String),

    #[error("dataset shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code category: 1 validation, 2 fit failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Config(_)
            | Error::DegenerateSweep(_)
            | Error::InsufficientData(_)
            | Error::UndefinedRatio(_)
            | Error::MissingDependency { .. }
            | Error::HashMismatch { .. } => 1,
            Error::DegenerateDesign { .. }
            | Error::FitFailure { .. }
            | Error::InvalidModel(_) => 2,
            Error::VersionMismatch { .. }
            | Error::MalformedHeader(_)
            | Error::ShapeMismatch(_)
            | Error::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
