// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("angular momentum domain error: {0}")]
    Domain(String),
    #[error("empty sector: {0}")]
    EmptySector(String),
    #[error("invalid level structure: {0}")]
    LevelStructure(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dimension guardrail exceeded: {0}")]
    Guardrail(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("integrator failure: {0}")]
    Integrator(String),
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;
