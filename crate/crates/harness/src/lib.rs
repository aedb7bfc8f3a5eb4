//! Experiment orchestration for the BD-RIS beamforming solver: Monte Carlo
//! trials, parameter sweeps, timing profiles, the oracle verification suite,
//! and the `bdris` command line.

pub mod cli;
pub mod csv;
pub mod error;
pub mod experiment;
pub mod verify;

pub use error::{Error, Result};
pub use experiment::{ExperimentSpec, Mode};
