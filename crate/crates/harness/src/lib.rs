//! Experiment harness for the SREDA solvers: configuration, seeded runs on a
//! worker pool, trace CSV / summary JSON output, sweeps and the property suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::HarnessError;
