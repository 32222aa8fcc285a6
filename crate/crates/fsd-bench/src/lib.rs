//! Monte Carlo harness around the FSD simulator: SNR sweeps with paired
//! noise across detectors, architecture schedule reports and per-bit LLR
//! audits, all deterministic for a fixed seed.

pub mod audit;
pub mod config;
pub mod report;
pub mod sweep;
