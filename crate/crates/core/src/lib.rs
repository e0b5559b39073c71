//! Spectrum sensing with energy detectors under Rayleigh fading: single
//! users, hard-decision cooperation, and reconfigurable antennas with state
//! switching or state selection.
//!
//! Analytic performance lives in [`detector`], [`fusion`] and [`reconfig`];
//! [`simkit`] is the Monte Carlo engine used to check them and to sweep
//! operating curves.

pub mod channel;
pub mod detector;
mod error;
pub mod fusion;
pub mod quad;
pub mod reconfig;
mod roots;
pub mod simkit;
pub mod specfun;

pub use error::{Error, Result};
