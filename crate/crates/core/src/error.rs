use std::path::PathBuf;

use crate::structure::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("illuminant axis endpoints coincide (|b - a| = {length:e})")]
    DegenerateAxis { length: f64 },

    #[error("triangle is degenerate (area {area:e})")]
    DegenerateTriangle { area: f64 },

    #[error("barycentric weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },

    #[error("channel {channel} = {value} is outside [0, 1]")]
    OutOfGamut { channel: usize, value: f64 },

    #[error("color has a non-finite channel")]
    NonFinite,

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid structure: {}", join(.0))]
    InvalidStructure(Vec<Violation>),

    #[error("invalid edit script: {}", .0.join("; "))]
    InvalidEdit(Vec<String>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("empty image ({width}x{height})")]
    EmptyImage { width: u32, height: u32 },

    #[error("lossy output not supported for round-trip guarantees")]
    LossyOutput,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec: {0}")]
    Codec(String),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },
}

fn join(violations: &[Violation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
