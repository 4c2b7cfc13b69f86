//! Exact-numerics simulator and analysis toolkit for a periodically driven
//! gradient-Ising spin chain realizing a discrete time crystal (DTC).
//!
//! The library covers the full workflow: Floquet state-vector evolution and
//! revival fidelities ([`evolve`]), exact quantum/classical Fisher-information
//! sensing ([`metrology`]), dense Floquet-spectrum entropy diagnostics
//! ([`spectrum`]), finite-size-scaling data collapse ([`fss`]), and a batch
//! experiment front-end with gate-schedule export ([`exp`]).
//!
//! See the crate `examples/` directory for one runnable example per major
//! capability, and the `dtc-sim` binary for the batch CLI.

pub mod dense;
pub mod error;
pub mod evolve;
pub mod exp;
pub mod fss;
pub mod lattice;
pub mod metrology;
pub mod spectrum;

pub use error::{Error, Result};
