//! Simulation of four-wave-mixing photon-pair generation in tapered As2Se3
//! microwires: mode solving, phasematching and pair rates, a Monte Carlo of
//! the heralded detection chain, and calibration fits.

pub mod apparatus;
pub mod calib;
pub mod config;
pub mod constants;
pub mod counting;
pub mod error;
pub mod fwm;
pub mod optics;
pub mod scenario;

pub use error::{Error, Result};
