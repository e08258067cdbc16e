//! Gaussian-process modelling of scalar ground fields, discrete partitions of
//! the posterior mean, and budgeted receding-horizon informative path planning.
//!
//! The crate is `no_std` and only needs `alloc`. File IO, configuration and the
//! command line live in the `fieldscout` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
mod linalg;

pub mod geometry;
pub mod gp;
pub mod metrics;
pub mod mission;
pub mod partition;
pub mod planner;
pub mod raster;

pub use error::{Error, Result};
pub use geometry::Point;
