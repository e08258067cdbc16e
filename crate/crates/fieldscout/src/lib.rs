//! Experiment drivers for weed-field representation and informative path
//! planning: configuration, raster IO, run directories and the CLI.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod output;
