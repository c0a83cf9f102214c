//! Sweep runner behind the `cvqkd` binary.
//!
//! A [`SweepConfig`] names the protocols, the distance and excess-noise
//! grids and the optimizer settings; [`run`] evaluates every grid point and
//! returns a [`Table`] that serializes to CSV or JSON with a fixed header.

pub mod baseline;
pub mod config;
mod error;
pub mod run;
pub mod table;

pub use baseline::Baseline;
pub use config::{BaselineQuantity, Command, Grid, OutputFormat, ProtocolName, SweepConfig};
pub use error::{CliError, CliResult, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
pub use run::{execute, run};
pub use table::{Cell, Table};
