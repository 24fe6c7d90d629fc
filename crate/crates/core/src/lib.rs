//! Josephson parametric amplifier simulator.
//!
//! Two engines describe the same device: a semiclassical input-output model
//! (Duffing steady state plus linearized gain) and a time-domain integration
//! of the lumped circuit. The `experiments` module runs characterization and
//! sweep workflows on both and compares them.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod model;
pub mod quantum;
pub mod time_domain;

pub use error::{Error, Result};
