use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },

    #[error("v_dc = {v_dc:.6} V is below the division guard {guard:.6} V")]
    Singularity { v_dc: f64, guard: f64 },

    #[error("grid collapse: |v_ac| = {magnitude:.6} V is below the guard {guard:.6} V")]
    GridCollapse { magnitude: f64, guard: f64 },

    #[error("negative load power {0} W")]
    NegativeLoad(f64),

    #[error("t = {t} s is outside the profile coverage")]
    OutsideCoverage { t: f64 },

    #[error("non-finite state produced at t = {t} s")]
    NonFinite { t: f64 },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("trajectory too short: {len} records, at least {need} required")]
    TooShort { len: usize, need: usize },

    #[error("cannot compare runs of different scenarios (`{left}` vs `{right}`)")]
    ScenarioMismatch { left: String, right: String },

    #[error("{location}: {message}")]
    Config { location: String, message: String },

    #[error("{}, row {row}: {message}", path.display())]
    Profile {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parameter(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Parameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
