//! Phase-field simulation and certification of mean curvature flow with
//! prescribed contact angle in a 2D rectangular container.
//!
//! The crate integrates the Allen-Cahn equation with a nonlinear Robin
//! boundary condition driving a contact angle, extracts the sharp interface,
//! and numerically checks the structural identities of the flow: energy
//! dissipation, Young's law, the BV motion law, and relative-entropy / bulk
//! error stability against calibrated reference flows.

pub mod calibration;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod interface;
pub mod io;
pub mod potentials;
pub mod solver;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
