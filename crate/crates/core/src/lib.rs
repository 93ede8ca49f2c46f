//! Simulation and analysis toolkit for linear coherent-feedback chains of
//! nondegenerate optical parametric amplifiers (NOPAs).
//!
//! The chain couples N NOPAs through two counter-propagating field paths with
//! per-segment transmission losses and time delays. This crate builds the
//! quadrature state-space model of the network, locates its stability
//! threshold in the pump parameter, computes two-mode squeezing (EPR
//! entanglement) spectra of the outgoing fields, and evolves the Gaussian
//! covariance matrix of the cavity modes to obtain logarithmic negativities.
//!
//! Modules map onto the analysis stages:
//!
//! - [`params`]: physical parameters and network configuration
//! - [`model`]: quadrature state-space assembly, delay-free and frequency-dependent
//! - [`interconnect`]: independent construction by elementary composition
//! - [`stability`]: Hurwitz tests, threshold computation, threshold tables
//! - [`dde`]: rightmost characteristic root of the delayed network
//! - [`spectra`]: two-mode squeezing spectra and the EPR sum criterion
//! - [`gaussian`]: Lyapunov covariance dynamics and logarithmic negativity
//! - [`sweep`]: parameter studies (equal power, target squeezing, optimal pump)

pub mod dde;
pub mod error;
pub mod gaussian;
pub mod interconnect;
pub mod linalg;
pub mod model;
pub mod params;
pub mod report;
pub mod spectra;
pub mod stability;
pub mod sweep;

pub use error::{Error, Result};
pub use params::{LossScenario, NetworkConfig, NopaParams};

/// Toolkit version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
