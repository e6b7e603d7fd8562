use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has degenerate dimensions {rows}x{cols}")]
    DegenerateDimensions { rows: usize, cols: usize },

    #[error("{kind} index {index} out of range (size {size})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        size: usize,
    },

    #[error("invalid matrix entry ({row}, {col}): {reason}")]
    InvalidEntry {
        row: usize,
        col: usize,
        reason: &'static str,
    },

    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("track {track} is assigned to artist {first} and to artist {second}")]
    InconsistentArtist {
        track: String,
        first: String,
        second: String,
    },

    #[error("unknown city: {0}")]
    UnknownCity(String),

    #[error("unknown model: {0}")]
    UnknownModel(String),

    #[error("relevant set is empty")]
    EmptyRelevantSet,

    #[error("ranking is empty")]
    EmptyRanking,

    #[error("no artist mapping for track {0}")]
    MissingArtist(usize),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("ill-conditioned normal equations (pivot {pivot:e} at column {column})")]
    IllConditioned { column: usize, pivot: f64 },

    #[error("training failed: {0}")]
    Training(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
