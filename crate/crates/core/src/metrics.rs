//! Stationarity measurement and oracle-complexity curves.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Vec1};
use crate::oracle::{Iterate, MinimaxOracle};
use crate::trace::RunTrace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationarityMethod {
    /// Closed-form `∇Φ`.
    Exact,
    /// `∇_x f(x, ŷ)` with `ŷ` from deterministic gradient ascent.
    InnerSolve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub x: Vec1,
    pub phi_grad_norm: f64,
    pub method: StationarityMethod,
    /// `‖∇_y f(x, ŷ)‖` of the approximate maximizer; zero on the exact route.
    pub residual: f64,
    pub ascent_steps: usize,
    /// False when the ascent hit its step cap before the residual target.
    pub converged: bool,
}

/// Ascent steps allowed before giving up.
pub const ASCENT_STEP_CAP: usize = 1_000_000;

/// `‖∇Φ(x)‖`, exactly when the oracle provides it. Otherwise `y` is driven by
/// exact gradient ascent with step `1/ℓ` until `‖∇_y f‖ ≤ tol·μ/10`, which
/// puts `‖∇_x f(x, ỹ) − ∇Φ(x)‖` below `tol/10`.
pub fn stationarity<O: MinimaxOracle>(oracle: &O, x: &[f64], tol: f64) -> Result<StationarityReport> {
    if !(tol > 0.0) {
        return Err(Error::Input(format!("tol must be positive, got {tol}")));
    }
    if let Ok(g) = oracle.phi_grad(x) {
        return Ok(StationarityReport {
            x: x.to_vec(),
            phi_grad_norm: linalg::norm(&g),
            method: StationarityMethod::Exact,
            residual: 0.0,
            ascent_steps: 0,
            converged: true,
        });
    }
    let prof = oracle.profile();
    let target = tol * prof.mu / 10.0;
    let mut p = Iterate::new(x.to_vec(), vec![0.0; oracle.dims().1]);
    for step in 0..=ASCENT_STEP_CAP {
        let g = oracle.exact_grad(&p)?;
        let residual = linalg::norm(&g.gy);
        if residual <= target || step == ASCENT_STEP_CAP {
            return Ok(StationarityReport {
                x: x.to_vec(),
                phi_grad_norm: linalg::norm(&g.gx),
                method: StationarityMethod::InnerSolve,
                residual,
                ascent_steps: step,
                converged: step < ASCENT_STEP_CAP,
            });
        }
        linalg::axpy_in_place(1.0 / prof.ell, &g.gy, &mut p.y);
    }
    unreachable!("loop returns at the step cap")
}

/// Physical oracle calls (initializer included) at the first row whose
/// `‖∇Φ(x_k)‖ ≤ eps`. `None` if no row reaches it.
pub fn evals_to_tolerance(trace: &RunTrace, eps: f64) -> Result<Option<u64>> {
    if trace.rows.iter().all(|r| r.phi_grad_norm.is_none()) {
        return Err(Error::Input("trace has no phi_grad_norm column; rerun with diagnostics".into()));
    }
    Ok(trace
        .rows
        .iter()
        .find(|r| r.phi_grad_norm.is_some_and(|g| g <= eps))
        .map(|r| r.evals_physical))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexityCurve {
    /// `(ε, evals to reach ε)`; `None` when the run never reached it.
    pub points: Vec<(f64, Option<u64>)>,
}

impl ComplexityCurve {
    pub fn reached(&self) -> Vec<(f64, u64)> {
        self.points.iter().filter_map(|&(e, n)| n.map(|n| (e, n))).collect()
    }

    /// Least-squares slope of `ln(evals)` against `ln(1/ε)` over reached
    /// points. Needs at least three reached points with distinct `ε`.
    pub fn fit_slope(&self) -> Result<f64> {
        let pts = self.reached();
        let skipped = self.points.len() - pts.len();
        if skipped > 0 {
            warn!("{skipped} unreached point(s) excluded from the slope fit");
        }
        if pts.len() < 3 {
            return Err(Error::Degenerate(format!("slope needs 3 reached points, got {}", pts.len())));
        }
        let xs: Vec<f64> = pts.iter().map(|(e, _)| (1.0 / e).ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|(_, n)| (*n as f64).max(1.0).ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx <= 1e-24 {
            return Err(Error::Degenerate("all epsilon values are identical".into()));
        }
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        Ok(sxy / sxx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_recovers_slope() {
        let curve = ComplexityCurve {
            points: [0.4, 0.2, 0.1, 0.05].iter().map(|&e: &f64| (e, Some((1e3 * e.powi(-3)).round() as u64))).collect(),
        };
        assert!((curve.fit_slope().unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn unreached_points_are_skipped() {
        let curve = ComplexityCurve { points: vec![(0.4, Some(100)), (0.2, None), (0.1, Some(400))] };
        assert!(matches!(curve.fit_slope(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn fourth_power_law() {
        let curve = ComplexityCurve { points: [0.5, 0.25, 0.125].iter().map(|&e: &f64| (e, Some((7.0 * e.powi(-4)) as u64))).collect() };
        assert!((curve.fit_slope().unwrap() - 4.0).abs() < 1e-9);
    }

    fn synthetic_trace() -> RunTrace {
        let mut rows = Vec::new();
        for (k, evals, g) in [(0, 10, 1.0), (1, 20, 0.5)] {
            let mut r = crate::trace::TraceRow::new(k, &crate::oracle::EvalCounter { physical: evals, paper: evals });
            r.phi_grad_norm = Some(g);
            rows.push(r);
        }
        RunTrace {
            algorithm: crate::trace::Algorithm::Sreda,
            rows,
            x_hat: vec![],
            x_hat_index: 0,
            x_final: vec![],
            y_final: vec![],
            init_evals: 0,
            inner_evals: 0,
            evals: Default::default(),
            k_requested: 1,
            bound_certified: true,
            warnings: vec![],
            meta: Default::default(),
            path: None,
        }
    }

    #[test]
    fn tolerance_lookup() {
        let t = synthetic_trace();
        assert_eq!(evals_to_tolerance(&t, 0.6).unwrap(), Some(20));
        assert_eq!(evals_to_tolerance(&t, f64::INFINITY).unwrap(), Some(10));
        assert_eq!(evals_to_tolerance(&t, 0.1).unwrap(), None);
        let mut bare = t.clone();
        bare.rows.iter_mut().for_each(|r| r.phi_grad_norm = None);
        assert!(matches!(evals_to_tolerance(&bare, 0.6), Err(Error::Input(_))));
    }

    #[test]
    fn identical_epsilons_are_degenerate() {
        let curve = ComplexityCurve { points: vec![(0.1, Some(1)), (0.1, Some(2)), (0.1, Some(3))] };
        assert!(matches!(curve.fit_slope(), Err(Error::Degenerate(_))));
    }
}
