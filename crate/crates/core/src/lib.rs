pub mod calibration;
pub mod config;
pub mod constants;
pub mod curve;
pub mod electrostatics;
pub mod error;
pub mod geometry;
pub mod grating;
pub mod materials;
pub mod pfa;
pub mod pipeline;
pub mod planar;
pub mod quadrature;
pub mod units;

pub use error::{Error, Result};
