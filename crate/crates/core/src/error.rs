use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value:e} outside validity window [{lo:e}, {hi:e}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("degenerate crossing at z = {z:e} m, omega = {omega:e} rad/s: branch cannot be tracked")]
    DegenerateCrossing { z: f64, omega: f64 },
    #[error("coupled-mode integration failed at omega = {omega:e} rad/s: {reason}")]
    Stiffness { omega: f64, reason: String },
    #[error("grid coverage: {0}")]
    Coverage(String),
    #[error("interferogram has no interior dip")]
    NoDip,
    #[error("asymmetry score undefined: curve is flat")]
    UndefinedScore,
    #[error("filter support [{lo:e}, {hi:e}] lies outside the state grid")]
    FilterSupport { lo: f64, hi: f64 },
    #[error("phase fit: {0}")]
    Fit(String),
    #[error("CAR undefined: accidental rate is zero")]
    CarUndefined,
    #[error("did not converge: {0}")]
    Convergence(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: transmission outside [0, 1] on rows {rows:?}")]
    TransmissionRange { path: PathBuf, rows: Vec<usize> },
    #[error("config: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse classes used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Stage { source, .. } => source.class(),
            Error::Config(_)
            | Error::InvalidModel(_)
            | Error::Parse { .. }
            | Error::TransmissionRange { .. }
            | Error::Json(_) => ErrorClass::Config,
            Error::Io { .. } => ErrorClass::Io,
            _ => ErrorClass::Numerical,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 2,
            ErrorClass::Numerical => 3,
            ErrorClass::Io => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn stage(stage: &'static str, source: Error) -> Self {
        Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
