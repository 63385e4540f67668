//! Simulation and analysis of a hybrid electronic-chemical probabilistic computer.
//!
//! An array of stirred Belousov-Zhabotinsky cells is replaced by phenomenological
//! probabilistic state machines. On top of those the crate provides:
//!
//! * [`lattice`]: grid topology, neighbourhoods and configuration-space counting.
//! * [`signal`]: colour-recognition and chemical clock state machines plus a
//!   synthetic colour-trace generator.
//! * [`chemodel`]: the probability that a cell reads as a high chemical state.
//! * [`cca1d`]: the 4096-rule one-dimensional chemical cellular automaton.
//! * [`cca2d`]: the two-dimensional Chemit automaton and its event analytics.
//! * [`qubo`]: Ising/QUBO Hamiltonian builders and exact oracles.
//! * [`hybrid`]: the two hybrid electronic-chemical solvers.
//! * [`markov`]: exact Markov-chain analysis of the consistency-check solver.
//! * [`seed`]: derivation of independent replica seeds.

pub mod cca1d;
pub mod cca2d;
pub mod chemodel;
mod error;
pub mod hybrid;
pub mod lattice;
pub mod markov;
pub mod qubo;
pub mod seed;
pub mod signal;

pub use error::{Error, Result};
pub use signal::ChemicalState;
