use thiserror::Error;

/// Errors raised by the partitioning, quadrature and optimization routines.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("cell is not cut by the level set")]
    NotCut,

    #[error("degenerate cut: no zero crossing found on any edge")]
    DegenerateCut,

    #[error("rule sequence depleted for {kind} at index {index}")]
    Depleted { kind: &'static str, index: usize },

    #[error("gramian is not positive definite (pivot {pivot}, value {value:e})")]
    Conditioning { pivot: usize, value: f64 },
}

impl Error {
    /// Short machine-readable tag, used in the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidGeometry(_) => "invalid_geometry",
            Error::NotCut => "not_cut",
            Error::DegenerateCut => "degenerate_cut",
            Error::Depleted { .. } => "depleted",
            Error::Conditioning { .. } => "conditioning",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
