//! Soft-output fixed-complexity sphere decoder (FSD) simulator for MIMO
//! detection.
//!
//! The crate covers the full receive chain for an uncoded spatial-multiplexing
//! link: bit mapping and channel simulation ([`mimo`]), plain and sorted QR
//! preprocessing ([`qrd`]), the floating-point FSD tree search ([`fsd`]),
//! exact ground-truth detectors ([`oracle`]), list-based max-log LLR
//! generation ([`llr`]) and a cycle-accurate model of a four-nodes-per-cycle
//! breadth-first FSD datapath with a 12-bit fixed-point arithmetic model
//! ([`arch`]).

pub mod arch;
pub mod fsd;
pub mod llr;
pub mod mimo;
pub mod oracle;
pub mod qrd;

use thiserror::Error;

/// Errors shared by the whole simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape mismatch: {0}")]
    InputShape(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular channel: residual column norm {norm:.3e} below tolerance {tol:.3e}")]
    SingularChannel { norm: f64, tol: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),
    #[error("lattice has {points} points, exceeding the exhaustive-search limit of {limit}")]
    LatticeTooLarge { points: u64, limit: u64 },
    #[error("candidate list is empty")]
    EmptyList,
    #[error("noise variance must be positive")]
    DegenerateNoise,
}

pub type Result<T> = std::result::Result<T, Error>;
