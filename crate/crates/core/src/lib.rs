//! Dynamical-decoupling toolkit.
//!
//! Pulse-sequence generators (Hahn, CPMG, CDD, UDD, CUDD, QDD), their analytic
//! decoupling diagnostics, and three independent engines for checking how well a
//! sequence suppresses decoherence:
//!
//! * [`spinboson`]: exact coherent-state trajectories of a qubit dephased by boson modes,
//! * [`finitebath`]: exact propagation of a qubit coupled to a finite-dimensional bath,
//! * [`classicalnoise`]: Gaussian classical noise, Monte Carlo against the filter integral.
//!
//! [`stateprotect`] applies the same timing to protect an arbitrary state of a
//! multi-level system, and [`orderfit`] turns error-vs-time sweeps into fitted
//! power-law exponents.

// Negated float comparisons are used on purpose so NaN falls into the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classicalnoise;
pub mod error;
pub mod finitebath;
pub mod format;
pub mod linalg;
pub mod orderfit;
pub mod pauli;
pub mod sequences;
pub mod spinboson;
pub mod stateprotect;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use pauli::Pauli;
pub use sequences::{Pulse, PulseSequence};
