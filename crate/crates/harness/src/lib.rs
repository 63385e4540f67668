//! Reproducible experiment runner for the chemcomp models.
//!
//! An experiment is an [`ExperimentConfig`] plus a master seed. [`run`]
//! dispatches on the config's kind, writes CSV, JSON and text outputs into a
//! directory and records them in a [`RunManifest`]. Replica `k` always draws
//! from `ChaCha8Rng::seed_from_u64(derive_seed(seed, k))`, and replicas are
//! merged by index, so [`replay`] of a manifest reproduces every output byte.

pub mod config;
mod error;
pub mod manifest;
mod run;

pub use chemcomp::seed::derive_seed;
pub use config::{ExperimentConfig, Kind};
pub use error::{HarnessError, Result};
pub use manifest::{replay, OutputRecord, ReplayReport, RunManifest, MANIFEST_FILE};
pub use run::{run, RunOutcome};
