use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("largest cluster holds {fraction:.4} of the sites (< 0.10); deep subcritical, study not meaningful")]
    ClusterTooSmall { fraction: f64 },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {last:.3e})")]
    SolverDiverged {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("graph has {sites} sites, dense oracle limited to {limit}")]
    TooLarge { sites: usize, limit: usize },

    #[error("no fine site matches coarse site {site} at {coords:?}")]
    UnmatchedCoordinate { site: usize, coords: [f64; 2] },

    #[error("maximum principle violated at step {step} (value {value:.3e}); use backward Euler (theta = 1) or a smaller step")]
    MaximumPrinciple { step: usize, value: f64 },

    #[error("event cap of {cap} reached at t = {time}")]
    EventOverflow { cap: u64, time: f64 },

    #[error("observable `{0}` has no corrected pairing in this record")]
    MismatchedObservable(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}
