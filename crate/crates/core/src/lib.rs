//! Stochastic recursive gradient descent ascent (SREDA) for nonconvex
//! strongly-concave minimax problems, with SGDA / SGDmax baselines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod inner;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod params;
pub mod problems;
pub mod rng;
pub mod solvers;
pub mod trace;

pub use error::{Error, Result};
pub use oracle::{Capabilities, EvalCounter, GradPair, Iterate, MinimaxOracle, SmoothnessProfile};
pub use params::{derive_params, derive_params_finite, BaselineParams, SredaParams};
pub use rng::{RunStreams, StreamPurpose};
pub use solvers::{delta_f_exact, sgda_run, sgdmax_run, sreda_finite_run, sreda_run, RunOptions};
pub use trace::{Algorithm, RunTrace, TraceRow};
