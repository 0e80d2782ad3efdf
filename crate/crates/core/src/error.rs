// SPDX-License-Identifier: Apache-2.0

use crate::jet::{DomainError, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("degenerate metric: |det g| = {det:e} at {point:?}")]
    DegenerateMetric { det: f64, point: Vec<f64> },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("right-hand side depends on coordinates other than the evolution variable: {0}")]
    XDependentRhs(String),
    #[error("vector is not null: g(V,V) = {0:e}")]
    NotNull(f64),
    #[error("tensor vanishes at every sampled point")]
    ZeroTensor,
    #[error("gradient vanishes at {0:?}")]
    ZeroGradient(Vec<f64>),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid metric descriptor: {0}")]
    Descriptor(String),
    #[error("ODE solver failure: {0}")]
    Solver(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
