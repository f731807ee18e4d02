//! Stochastic gradient descent ascent and SGD with an approximate max-oracle.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{self, Vec2};
use crate::oracle::{EvalCounter, Iterate, MinimaxOracle};
use crate::params::BaselineParams;
use crate::rng::RunStreams;
use crate::trace::{Algorithm, RunTrace, TraceRow};

use super::{record_diagnostics, RunOptions};

fn check_start<O: MinimaxOracle>(oracle: &O, x0: &[f64], opts: &RunOptions) -> Result<Vec2> {
    let (d1, d2) = oracle.dims();
    if x0.len() != d1 {
        return Err(Error::Input(format!("x0 has dimension {}, expected {d1}", x0.len())));
    }
    if opts.diagnostics && !oracle.capabilities().diagnostics() {
        return Err(Error::Capability("diagnostics need exact gradients and the primal function"));
    }
    match &opts.y0 {
        Some(y) if y.len() == d2 => Ok(y.clone()),
        Some(y) => Err(Error::Input(format!("y0 has dimension {}, expected {d2}", y.len()))),
        None => Ok(vec![0.0; d2]),
    }
}

fn baseline_meta(bp: &BaselineParams, epsilon: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("epsilon".to_string(), epsilon),
        ("eta".to_string(), bp.eta),
        ("lambda".to_string(), bp.lam),
        ("batch".to_string(), bp.batch as f64),
        ("k".to_string(), bp.k as f64),
        ("zeta".to_string(), bp.zeta),
        ("inner_budget".to_string(), bp.inner_budget as f64),
    ])
}

/// Simultaneous SGDA: `x ← x − η g_x`, `y ← y + λ g_y` from one shared batch.
/// `x̂` is uniform over `x_0, …, x_K`.
pub fn sgda_run<O: MinimaxOracle>(
    oracle: &O,
    x0: &[f64],
    bp: &BaselineParams,
    epsilon: f64,
    streams: &mut RunStreams,
    opts: &RunOptions,
) -> Result<RunTrace> {
    let mut y = check_start(oracle, x0, opts)?;
    let mut x = x0.to_vec();
    let k_total = opts.iteration_cap.map_or(bp.k, |c| c.min(bp.k));
    let hat_index = streams.index.index_inclusive(k_total as usize) as u64;
    let mut evals = EvalCounter::new();
    let mut rows = Vec::with_capacity(k_total as usize + 1);
    let mut path = opts.record_path.then(Vec::new);
    let mut x_hat = x.clone();

    for k in 0..=k_total {
        let mut row = TraceRow::new(k, &evals);
        if opts.diagnostics {
            record_diagnostics(oracle, &x, &y, None, &mut row)?;
        }
        if let Some(p) = path.as_mut() {
            p.push(Iterate::new(x.clone(), y.clone()));
        }
        if k == hat_index {
            x_hat = x.clone();
        }
        if k == k_total {
            rows.push(row);
            break;
        }
        let g = oracle.stoch_grad(&Iterate::new(x.clone(), y.clone()), bp.batch as usize, &mut streams.baseline, &mut evals);
        row.eta = Some(bp.eta);
        row.v_norm = Some(linalg::norm(&g.gx));
        row.u_norm = Some(linalg::norm(&g.gy));
        rows.push(row);
        linalg::axpy_in_place(-bp.eta, &g.gx, &mut x);
        linalg::axpy_in_place(bp.lam, &g.gy, &mut y);
        if !linalg::all_finite(&x) || !linalg::all_finite(&y) {
            return Err(Error::Input(format!("iterate diverged at k = {k}")));
        }
    }

    let capped = k_total < bp.k;
    let mut warnings = Vec::new();
    if capped {
        warnings.push(format!("iteration cap {k_total} < K = {}", bp.k));
    }
    Ok(RunTrace {
        algorithm: Algorithm::Sgda,
        rows,
        x_hat,
        x_hat_index: hat_index,
        x_final: x,
        y_final: y,
        init_evals: 0,
        inner_evals: 0,
        evals,
        k_requested: bp.k,
        bound_certified: !capped,
        warnings,
        meta: baseline_meta(bp, epsilon),
        path,
    })
}

/// SGDmax: before each descent step, `y` is refined by single-sample
/// stochastic gradient ascent for up to `inner_budget` steps. With
/// diagnostics on, the ascent stops once `Φ(x) − f(x, y) ≤ ζ`.
pub fn sgdmax_run<O: MinimaxOracle>(
    oracle: &O,
    x0: &[f64],
    bp: &BaselineParams,
    epsilon: f64,
    streams: &mut RunStreams,
    opts: &RunOptions,
) -> Result<RunTrace> {
    let mut y = check_start(oracle, x0, opts)?;
    let mut x = x0.to_vec();
    let k_total = opts.iteration_cap.map_or(bp.k, |c| c.min(bp.k));
    let hat_index = streams.index.index_inclusive(k_total as usize) as u64;
    let mut evals = EvalCounter::new();
    let mut inner_evals = 0u64;
    let mut rows = Vec::with_capacity(k_total as usize + 1);
    let mut path = opts.record_path.then(Vec::new);
    let mut x_hat = x.clone();
    let mut unmet = 0u64;

    for k in 0..=k_total {
        let mut row = TraceRow::new(k, &evals);
        if opts.diagnostics {
            record_diagnostics(oracle, &x, &y, None, &mut row)?;
        }
        if let Some(p) = path.as_mut() {
            p.push(Iterate::new(x.clone(), y.clone()));
        }
        if k == hat_index {
            x_hat = x.clone();
        }
        if k == k_total {
            rows.push(row);
            break;
        }

        let before = evals.physical;
        let phi = if opts.diagnostics { Some(oracle.phi_value(&x)?) } else { None };
        let mut met = false;
        for _ in 0..bp.inner_budget {
            if let Some(phi) = phi {
                if phi - oracle.value(&Iterate::new(x.clone(), y.clone()))? <= bp.zeta {
                    met = true;
                    break;
                }
            }
            let g = oracle.stoch_grad(&Iterate::new(x.clone(), y.clone()), 1, &mut streams.baseline, &mut evals);
            linalg::axpy_in_place(bp.lam, &g.gy, &mut y);
        }
        if phi.is_some() && !met {
            unmet += 1;
        }
        inner_evals += evals.physical - before;

        let g = oracle.stoch_grad(&Iterate::new(x.clone(), y.clone()), bp.batch as usize, &mut streams.baseline, &mut evals);
        row.eta = Some(bp.eta);
        row.v_norm = Some(linalg::norm(&g.gx));
        row.u_norm = Some(linalg::norm(&g.gy));
        rows.push(row);
        linalg::axpy_in_place(-bp.eta, &g.gx, &mut x);
        if !linalg::all_finite(&x) || !linalg::all_finite(&y) {
            return Err(Error::Input(format!("iterate diverged at k = {k}")));
        }
    }

    let capped = k_total < bp.k;
    let mut warnings = Vec::new();
    if capped {
        warnings.push(format!("iteration cap {k_total} < K = {}", bp.k));
    }
    if unmet > 0 {
        warnings.push(format!("max-oracle missed zeta in {unmet} of {k_total} outer steps"));
    }
    Ok(RunTrace {
        algorithm: Algorithm::Sgdmax,
        rows,
        x_hat,
        x_hat_index: hat_index,
        x_final: x,
        y_final: y,
        init_evals: 0,
        inner_evals,
        evals,
        k_requested: bp.k,
        bound_certified: !capped,
        warnings,
        meta: baseline_meta(bp, epsilon),
        path,
    })
}
