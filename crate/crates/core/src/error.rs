use crate::geometry::{Manifold, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Incompatible,
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("incompatible manifolds: expected {expected}, found {found}")]
    IncompatibleManifolds { expected: Manifold, found: Manifold },

    #[error("invalid manifold point: {0}")]
    Validation(Violation),

    #[error("invalid point in sequence `{sequence}` at frame {frame}: {violation}")]
    SequenceValidation {
        sequence: String,
        frame: usize,
        violation: Violation,
    },

    #[error("outside injectivity radius: {0}")]
    Injectivity(String),

    #[error("degenerate projection: singular value {sigma:e} at rank {rank}")]
    DegenerateProjection { rank: usize, sigma: f64 },

    #[error("degenerate extrinsic mean: no spectral gap at rank {rank} (gap {gap:e})")]
    DegenerateMean { rank: usize, gap: f64 },

    #[error("degenerate histogram: no flow vector above the noise floor")]
    DegenerateHistogram,

    #[error("rank-deficient landmarks: second singular value {0:e}")]
    RankDeficient(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("need at least {needed} data points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("label {label} out of range for alphabet of size {k}")]
    LabelOutOfRange { label: usize, k: usize },

    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("codebook mismatch: expected {expected}, found {found}")]
    CodebookMismatch { expected: String, found: String },

    #[error("database entry `{0}` carries no label")]
    Unlabeled(String),

    #[error("position {position} with length {len} out of range for sequence of length {total}")]
    OutOfRange {
        position: usize,
        len: usize,
        total: usize,
    },

    #[error("unsupported format version {found} (this build reads up to {supported})")]
    Version { found: u32, supported: u32 },

    #[error("artifact integrity check failed: {0}")]
    Integrity(String),

    #[error("unexpected artifact kind: expected {expected}, found {found}")]
    ArtifactKind { expected: String, found: String },

    #[error("malformed artifact: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::IncompatibleManifolds { .. }
            | Error::CodebookMismatch { .. }
            | Error::Version { .. }
            | Error::Integrity(_)
            | Error::ArtifactKind { .. } => ErrorClass::Incompatible,
            Error::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.into())
        } else {
            Error::Format(e.to_string())
        }
    }
}
