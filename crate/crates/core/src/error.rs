use thiserror::Error;

use crate::geometry::GeometryError;
use crate::imaging::ImagingError;
use crate::perturb::PerturbError;
use crate::protocol::ProtocolError;
use crate::stl::StlError;
use crate::tiles::TilesError;

/// Any failure surfaced by a pipeline stage or subcommand.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error(transparent)]
    Tiles(#[from] TilesError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const UNSAT: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const RUNTIME: u8 = 3;
}

impl Error {
    /// Input problems map to 2; I/O, network and budget failures map to 3.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Geometry(_) | Error::Stl(_) | Error::Tiles(_) | Error::Read { .. } | Error::Json { .. } => {
                exit::INPUT
            }
            Error::Config(_) => exit::INPUT,
            Error::Imaging(ImagingError::Io(_)) => exit::RUNTIME,
            Error::Imaging(_) => exit::INPUT,
            Error::Perturb(PerturbError::BudgetExhausted { .. } | PerturbError::Io(_)) => exit::RUNTIME,
            Error::Perturb(_) => exit::INPUT,
            Error::Protocol(
                ProtocolError::InvalidEndpoint(_)
                | ProtocolError::InvalidMessage(_)
                | ProtocolError::FieldOutOfRange(_),
            ) => exit::INPUT,
            Error::Protocol(_) => exit::RUNTIME,
            Error::Io(_) => exit::RUNTIME,
        }
    }
}
