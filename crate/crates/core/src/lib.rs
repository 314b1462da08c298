//! Simulation and analysis toolkit for the mid-circuit measurement
//! randomized benchmarking suite (`mcm-rb`, `delay-rb`, `mcm-rep`).
//!
//! The crate is organised bottom-up:
//!
//! - [`clifford`]: the 24-element single-qubit Clifford group.
//! - [`simulator`]: dense density-matrix evolution of a control/ancilla pair.
//! - [`noise`]: error channels and per-scenario noise models.
//! - [`protocols`]: circuit generation and full suite runs.
//! - [`analysis`]: exponential fits, EPC/EPM, interleaved estimates and
//!   error-signature classification.
//! - [`channel_metrics`]: Choi states, effective channels, average gate
//!   fidelity and Pauli transfer matrices.
//!
//! Two-qubit operators use the ordering `ancilla ⊗ control`: basis index
//! `2 * a + c` for ancilla bit `a` and control bit `c`.

pub mod analysis;
pub mod channel_metrics;
pub mod clifford;
mod error;
pub mod linalg;
pub mod noise;
pub mod protocols;
pub mod simulator;

pub use error::{Error, Result};
