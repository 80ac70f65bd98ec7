use thiserror::Error;

/// Errors surfaced by solver, analyzer and orchestration code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("{what} contains non-finite samples")]
    NonFinite { what: &'static str },

    #[error("{what} must have zero mean (|mean| = {mean:.3e})")]
    NonzeroMean { what: &'static str, mean: f64 },

    #[error("invalid parameter `{name}`: {why}")]
    InvalidParam { name: &'static str, why: String },

    #[error("time step {dt:.3e} violates the advection bound; admissible dt = {admissible:.3e}")]
    CflViolation { dt: f64, admissible: f64 },

    #[error("radius {r:.6} is not a ladder scale (minimum {min:.6})")]
    RadiusNotInLadder { r: f64, min: f64 },

    #[error("scale ladder is empty")]
    EmptyLadder,

    #[error("calibration corpus is empty")]
    EmptyCorpus,

    #[error("rescale by {factor} maps mode {mode:?} outside the resolved band")]
    RescaleBand { factor: f64, mode: [i64; 3] },

    #[error("rescale by {factor} requires mode {mode:?} to map onto the integer lattice")]
    RescaleNonInteger { factor: f64, mode: [i64; 3] },

    #[error("config key `{key}`: {why}")]
    Config { key: String, why: String },

    #[error("numerical failure: {when}")]
    Numerical { when: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
