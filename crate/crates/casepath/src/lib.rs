//! Files, simulation, parallel CV, benchmarks and the `casepath` command line.

pub mod bench;
pub mod cli;
pub mod error;
pub mod io;
pub mod parallel;
pub mod plot;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
