//! Experiment harness for the noisy-LQR actor-critic toolkit: configuration
//! parsing and hashing, multi-seed execution with CSV emission, cross-seed
//! aggregation, and the property-check suite.

pub mod aggregate;
pub mod checks;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod runner;

pub use error::{Error, Result};
