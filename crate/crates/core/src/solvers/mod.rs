//! Outer solvers: SREDA and the SGDA / SGDmax baselines.

mod baselines;
mod sreda;

pub use baselines::{sgda_run, sgdmax_run};
pub use sreda::{sreda_finite_run, sreda_run};

use crate::error::{Error, Result};
use crate::linalg::{self, Vec2};
use crate::oracle::{GradPair, Iterate, MinimaxOracle};
use crate::trace::TraceRow;

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Record exact `‖∇Φ‖`, `δ_k` and `Δ_k` in every row.
    pub diagnostics: bool,
    /// Starting `y`; skips the initializer when set.
    pub y0: Option<Vec2>,
    /// Stop after this many outer iterations. A cap below the derived `K`
    /// voids the stationarity certificate.
    pub iteration_cap: Option<u64>,
    /// Keep every `(x_k, y_k)` in the trace.
    pub record_path: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { diagnostics: true, y0: None, iteration_cap: None, record_path: false }
    }
}

/// Fills the diagnostic cells of `row` at `(x, y)`. `est` is the current
/// estimate `(v, u)`, if any.
pub(crate) fn record_diagnostics<O: MinimaxOracle>(
    oracle: &O,
    x: &[f64],
    y: &[f64],
    est: Option<(&[f64], &[f64])>,
    row: &mut TraceRow,
) -> Result<()> {
    let p = Iterate::new(x.to_vec(), y.to_vec());
    let g = oracle.exact_grad(&p)?;
    row.phi_grad_norm = Some(linalg::norm(&oracle.phi_grad(x)?));
    row.delta_k = Some(linalg::norm_sq(&g.gy));
    if let Some((v, u)) = est {
        let e = GradPair { gx: v.to_vec(), gy: u.to_vec() };
        row.big_delta_k = Some(e.minus(&g).norm_sq());
    }
    Ok(())
}

/// Conservative initial gap `Φ(x₀) − Φ* + ζ/(2μ)`. The second term bounds
/// `Φ(x₀) − f(x₀, y₀)` for any `y₀` with `‖∇_y f(x₀, y₀)‖² ≤ ζ`.
pub fn delta_f_exact<O: MinimaxOracle>(oracle: &O, x0: &[f64], zeta: f64) -> Result<f64> {
    let phi_star = oracle
        .phi_min()
        .ok_or(Error::Capability("delta_f needs a known minimum of the primal function"))?;
    let prof = oracle.profile();
    Ok(oracle.phi_value(x0)? - phi_star + zeta / (2.0 * prof.mu))
}
