use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A carrier distance of zero puts the walker on top of the carrier.
    #[error("singularity: {0}")]
    Singularity(String),

    /// k(E) evaluated to a non-negative value; the activity lies outside
    /// the range the line was calibrated on.
    #[error("activity E = {air_intake} L/h is outside the calibrated range of the {mode} k-line (k = {k})")]
    CalibrationRange { mode: String, air_intake: f64, k: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot place {requested} carriers in {available} cells")]
    Capacity { requested: usize, available: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("rank deficient: all points share E = {0}")]
    RankDeficient(f64),

    #[error("unknown mode `{0}`")]
    UnknownMode(String),

    /// A value failed a schema or invariant check. `field` is a dotted path
    /// such as `routes[1].segments[0].stops`.
    #[error("{field}: {message}")]
    Validation { field: String, message: String },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
