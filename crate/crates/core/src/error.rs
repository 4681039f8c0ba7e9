use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no edges")]
    NoEdges,

    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("hyperedge {0} has no source item")]
    MissingSource(usize),

    #[error("no goodness score for item {0}")]
    MissingGoodness(usize),

    #[error("value {value} outside the allowed range {range}")]
    OutOfRange { value: f64, range: String },

    #[error("no observations")]
    NoObservations,

    #[error("observation kind mismatch: expected {expected}")]
    KindMismatch { expected: &'static str },

    #[error("split leaves an empty side ({observed} observations, holdout {fraction})")]
    DegenerateSplit { observed: usize, fraction: f64 },

    #[error("empty prediction list")]
    EmptyPredictions,

    #[error("unknown vertex id {0:?}")]
    UnknownVertex(String),

    #[error("empty query hyperedge")]
    EmptyQuery,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
