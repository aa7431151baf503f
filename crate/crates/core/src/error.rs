use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulator.
#[derive(Debug, Error)]
pub enum SimError {
    /// A scenario or campaign parameter violates its documented range
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Config text could not be parsed
    #[error("failed to parse config {path}: {message}")]
    ConfigParse { path: String, message: String },

    /// Input arrays disagree on the number of satellites, UTs or subcarriers
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A link whose channel has zero norm was asked to carry a precoder
    #[error("degenerate link (satellite {sat}, UT {ut})")]
    DegenerateLink { sat: usize, ut: usize },

    /// An association references a satellite the UT cannot see
    #[error("UT {ut} is associated with satellite {sat} which is below the minimum elevation")]
    InvisibleServing { sat: usize, ut: usize },

    /// Statistics requested over an empty sample
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, SimError>;

impl SimError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        SimError::Csv {
            path: path.into(),
            source,
        }
    }
}
