//! Simulation and analysis toolkit for eddy-current imaging with an
//! all-optical NV-diamond magnetometer.
//!
//! The crate is organized along the signal chain:
//!
//! * [`em`]: induced fields, skin depth and the secondary field of thin
//!   conductive discs.
//! * [`magnetometer`]: phenomenological PL-versus-field model, lock-in R,
//!   operating-point selection and sensor bandwidth.
//! * [`lockin`]: time-domain detector signals and digital demodulation.
//! * [`scan`]: conductivity maps, raster scans and image export.
//! * [`analysis`]: cross sections, resolution-kernel and bandwidth fits,
//!   minimum detectable conductivity.
//! * [`config`]: the unit-checked key-value configuration format.

pub mod analysis;
pub mod config;
pub mod em;
pub mod error;
pub mod exec;
pub mod lockin;
pub mod magnetometer;
pub mod scan;

pub use error::{Error, FitError, Result};
pub use exec::Execution;
