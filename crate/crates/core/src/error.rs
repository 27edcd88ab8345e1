use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator, its diagnostics and the run harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("scenario `{scenario}` does not fit the configuration: {reason}")]
    ScenarioMismatch { scenario: String, reason: String },

    #[error("no lattice site carries positive charge")]
    DegenerateScenario,

    #[error("particle set is empty")]
    EmptyParticleSet,

    #[error("particle at x = {position} lies outside the grid [-{half_length}, {half_length}]")]
    ParticleOutsideGrid { position: f64, half_length: f64 },

    #[error("domain of validity is exhausted")]
    Exhausted,

    #[error("monitor half-width {half_width} exceeds the initial half-length {half_length}")]
    MonitorTooWide { half_width: f64, half_length: f64 },

    #[error("scenario `{0}` has no analytic field")]
    NoAnalyticField(String),

    #[error("convergence study: {0}")]
    Convergence(String),

    #[error("decay fit: {0}")]
    Fit(String),

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
