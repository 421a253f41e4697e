// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use eco_core::design::DesignError;
use eco_core::irgrid::IrError;
use eco_core::lagrangian::LagrangianError;
use eco_core::library::LibraryError;
use eco_core::netlist::NetlistError;
use eco_core::rl::{ModelError, RlError};

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_ENGINE: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum EcoError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Lagrangian(#[from] LagrangianError),
    #[error(transparent)]
    Rl(RlError),
}

impl From<RlError> for EcoError {
    fn from(e: RlError) -> Self {
        match e {
            RlError::NoValidAction { .. } => EcoError::Infeasible(e.to_string()),
            e => EcoError::Rl(e),
        }
    }
}

impl EcoError {
    pub fn exit_code(&self) -> u8 {
        match self {
            EcoError::Config(_)
            | EcoError::Parse { .. }
            | EcoError::Io { .. }
            | EcoError::Library(_)
            | EcoError::Netlist(_)
            | EcoError::Model(_) => EXIT_CONFIG,
            EcoError::Infeasible(_) => EXIT_INFEASIBLE,
            EcoError::Ir(_) | EcoError::Design(_) | EcoError::Lagrangian(_) | EcoError::Rl(_) => EXIT_ENGINE,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        EcoError::Io { path: path.to_path_buf(), source }
    }
}

pub type Result<T> = std::result::Result<T, EcoError>;
