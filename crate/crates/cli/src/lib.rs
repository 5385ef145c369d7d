//! Library half of the `cvcert` experiment runner: config parsing, sweep
//! resolution, closed-form region grids with contour extraction, modulator
//! calibration fitting, and the report writers used by the binary.
//!
//! All output files are documented in `SCHEMA.md` at the workspace root.

pub mod calibration;
pub mod config;
pub mod error;
pub mod output;
pub mod region;
pub mod runner;

pub use calibration::CalibrationFit;
pub use config::{ProtocolKind, RunConfig, SweepAxis};
pub use error::CliError;
