//! File formats, parallel Monte Carlo and the command-line workflows built
//! on `setgc-core`.

pub mod error;
pub mod io;
pub mod commands;
pub mod montecarlo;
pub mod selftest;

pub use error::CliError;
