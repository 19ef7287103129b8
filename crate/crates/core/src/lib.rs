//! Simulation of a two-car linear test bench for impedance and force control
//! of hydraulic and electric actuators.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bench;
#[cfg(feature = "cli")]
pub mod cli;
pub mod config;
pub mod control;
pub mod csvio;
pub mod electric;
pub mod error;
pub mod experiments;
pub mod hydraulic;
pub mod mechanics;
pub mod presets;
pub mod sensing;
pub mod sim;

pub use error::{ConfigError, ExperimentError, IoError, ModelError, SimError};
pub use experiments::{ExperimentKind, ExperimentSpec, SeedPolicy};
pub use sim::{SimConfig, TimeSeries};
