//! Joint active and passive beamforming for a fully connected beyond-diagonal
//! reconfigurable intelligent surface (BD-RIS) serving a multi-user downlink.
//!
//! The crate maximizes the weighted sum rate by alternating closed-form
//! fractional-programming updates with projected successive linear
//! approximation (PSLA) inner loops for the transmit precoder `W` and the
//! symmetric unitary scattering matrix `Θ`.
//!
//! Modules:
//!
//! * [`model`]: configuration, channels and beamforming state.
//! * [`fp`]: rates, auxiliary-variable updates and the surrogate objective.
//! * [`projections`]: projections onto the feasible sets and spectral shifts.
//! * [`psla`]: the inner PSLA loops and the outer alternating driver.
//! * [`oracle`]: brute-force verifiers that share no code with the solver.

pub mod error;
pub mod fp;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod projections;
pub mod psla;

pub use error::{Error, Result};
pub use linalg::{CMat, C64};
pub use model::{AuxiliaryVars, BeamformingState, ChannelSet, SystemConfig};
pub use psla::{solve_fp_psla, SolverOptions, SolverReport, Termination};
