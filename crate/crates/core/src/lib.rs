//! Small parameterized quantum circuits trained as regression models in a
//! noiseless statevector simulation, plus the tooling used to study the shape
//! of their loss landscape.
//!
//! The crate is organized bottom-up:
//!
//! - [`simulator`]: dense statevector with RY/RZ/CNOT kernels and Pauli-Z
//!   readout
//! - [`ansatz`]: the data-encoding circuit and the trainable gate schedule
//! - [`gradloss`]: MSE loss, parameter-shift gradients, finite-difference
//!   oracles
//! - [`optim`]: SGD, Adam, and natural-gradient steps with Fubini-Study
//!   metric construction
//! - [`harness`]: dataset generation, training loop, hyperparameter sweeps,
//!   summaries
//! - [`landscape`]: interpolated 1-D/2-D loss cuts and gate-dropout curves
//! - [`connectivity`]: mean-shift aggregation of minima and nudged-elastic-band
//!   paths between them
//! - [`io`]: the on-disk formats (dataset CSV, run-record JSONL, grid/curve
//!   CSVs, sidecar JSON)
//!
//! Everything is deterministic given the seeds recorded in configs: identical
//! config and seed reproduce identical results bit for bit.

pub mod ansatz;
pub mod connectivity;
pub mod error;
pub mod gradloss;
pub mod harness;
pub mod io;
pub mod landscape;
pub mod optim;
pub mod simulator;

pub use error::{Error, Result};
