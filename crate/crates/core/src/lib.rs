//! Simulation of temporal correlation functions of a dichotomic quantum
//! observable, the measurement protocols that extract them, and the
//! Leggett-Garg inequalities they feed.
//!
//! The crate is organized around six modules:
//!
//! - [`qcore`]: dense complex operators and states on small Hilbert spaces,
//!   plus the built-in spin model.
//! - [`twotime`]: the two-time operator algebra (correlator and disturbance
//!   operators) and the coarse-grained "same"/"diff" history states.
//! - [`histories`]: general class operators, the decoherence functional,
//!   consistency and decoherence predicates, and record projectors.
//! - [`protocols`]: correlation-function measurement protocols (sequential,
//!   quasi-probability, CNOT-ancilla, record/decay) and the NSIT diagnostic.
//! - [`lg`]: three-time Leggett-Garg scenario assembly, standard and
//!   invasiveness-modified inequality checks, and violation scans.
//! - [`macroreal`]: classical macrorealist hidden-variable Monte Carlo
//!   baselines with optional measurement kicks.

pub mod error;
pub mod histories;
pub mod lg;
pub mod macroreal;
pub mod protocols;
pub mod qcore;
pub mod twotime;

pub use error::{Error, Result};
pub use qcore::{Operator, QuantumState, Sign, SpinModel, C64};
