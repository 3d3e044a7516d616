//! Threshold simulations for the C4-concatenated toric code.
//!
//! The crate builds the plain toric code and its C4-concatenated variant on
//! the square-octagon lattice, extracts syndromes through noisy parity-check
//! schedules, decodes with minimum-weight perfect matching under a deformed
//! Manhattan metric, and estimates noise thresholds by Monte Carlo.

pub mod circuits;
pub mod cli;
pub mod codes;
pub mod decode;
pub mod experiments;
pub mod matching;
pub mod noise;
pub mod pauli;

pub use codes::{build_c4_toric, build_toric, CodeFamily, CodeSpec};
pub use pauli::{Pauli, PauliOperator};
