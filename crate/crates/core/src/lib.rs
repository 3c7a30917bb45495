//! Quantum gates as continuous-time evolutions of open two-qubit systems.
//!
//! The crate models a gate as `U = e^{-iKt*}` for a Hermitian generator `K`,
//! follows the joint two-qubit state through the gate interval, and studies what
//! each qubit sees on its own:
//!
//! - [`gates`]: gates from generators, named gates, operator Schmidt rank as an
//!   entangling certificate.
//! - [`dynamics`]: sampled trajectories inside the gate interval and their
//!   entanglement profile.
//! - [`maps`]: the reduced dynamical map induced by a product initial state,
//!   its Choi matrix and Kraus form, CP-divisibility, and a witness that no
//!   state-independent map exists on sub-intervals that start from correlated states.
//! - [`circuits`]: QFT construction and per-gate separability audits.
//! - [`cli`]: scenario files and the reports behind the `udmlab` binary.

pub mod circuits;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod maps;
pub mod random;
pub mod report;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
pub use states::{DensityMatrix, PureState, Stabilizer};
