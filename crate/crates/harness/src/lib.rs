//! Experiment harness: configuration, validation, simulation drivers,
//! certificates and output artifacts for the Glauber-Kawasaki
//! hydrodynamic-limit experiments.

pub mod certify;
pub mod config;
pub mod error;
pub mod hydro;
pub mod ladder;
pub mod oracle;
pub mod output;
pub mod plot;
pub mod pool;
pub mod validate;

pub use error::{HarnessError, Result};
