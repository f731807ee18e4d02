//! SREDA: normalized descent on `x` with a recursive gradient estimator, and a
//! multi-step concave maximizer on `y` after every outer step.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::estimator::EstimatorState;
use crate::inner::{concave_maximizer, isarah, isarah_auto_config, sarah, InitConfig};
use crate::linalg::{self, Vec1, Vec2};
use crate::oracle::{ConvexOracle, EvalCounter, Iterate, MinimaxOracle, NegSlice};
use crate::params::{step_size, RestartMode, SredaParams};
use crate::rng::RunStreams;
use crate::trace::{Algorithm, RunTrace, TraceRow};

use super::{record_diagnostics, RunOptions};

/// Stochastic SREDA. `y₀` comes from iSARAH on `−f(x₀, ·)` unless supplied in
/// `opts`.
pub fn sreda_run<O: MinimaxOracle>(
    oracle: &O,
    x0: &[f64],
    params: &SredaParams,
    streams: &mut RunStreams,
    opts: &RunOptions,
) -> Result<RunTrace> {
    if params.restart != RestartMode::Batch {
        return Err(Error::Input("stochastic SREDA needs batch restarts; use sreda_finite_run".into()));
    }
    run(oracle, x0, params, streams, opts, Algorithm::Sreda)
}

/// Finite-sum SREDA: full-gradient restarts and a SARAH initializer.
pub fn sreda_finite_run<O: MinimaxOracle>(
    oracle: &O,
    x0: &[f64],
    params: &SredaParams,
    streams: &mut RunStreams,
    opts: &RunOptions,
) -> Result<RunTrace> {
    if !oracle.capabilities().is_finite_sum {
        return Err(Error::Capability("finite-sum SREDA needs a finite-sum oracle"));
    }
    let mut p = params.clone();
    p.restart = RestartMode::FullGradient;
    run(oracle, x0, &p, streams, opts, Algorithm::SredaFinite)
}

fn initialize_y<O: MinimaxOracle>(
    oracle: &O,
    x0: &[f64],
    params: &SredaParams,
    streams: &mut RunStreams,
    evals: &mut EvalCounter,
    meta: &mut BTreeMap<String, f64>,
) -> Result<Vec2> {
    let slice = NegSlice::new(oracle, x0.to_vec());
    let w0 = vec![0.0; oracle.dims().1];
    let cfg = match params.restart {
        RestartMode::Batch => isarah_auto_config(&slice, &w0, params.zeta, &mut streams.init, evals),
        RestartMode::FullGradient => {
            let g0 = slice.full_grad(&w0, evals)?;
            InitConfig::sarah(&slice.profile(), params.zeta, linalg::norm_sq(&g0), slice.num_components().unwrap_or(1))
        }
    };
    meta.insert("init_gamma".into(), cfg.gamma);
    meta.insert("init_m_prime".into(), cfg.m_prime as f64);
    meta.insert("init_batch".into(), cfg.batch as f64);
    meta.insert("init_epochs".into(), cfg.epochs as f64);
    match params.restart {
        RestartMode::Batch => Ok(isarah(&slice, &w0, &cfg, &mut streams.init, evals)),
        RestartMode::FullGradient => sarah(&slice, &w0, &cfg, &mut streams.init, evals),
    }
}

fn restart<O: MinimaxOracle>(
    oracle: &O,
    point: Iterate,
    params: &SredaParams,
    streams: &mut RunStreams,
    evals: EvalCounter,
) -> Result<EstimatorState> {
    match params.restart {
        RestartMode::Batch => Ok(EstimatorState::init_restart(oracle, point, params.s1 as usize, &mut streams.restart, evals)),
        RestartMode::FullGradient => EstimatorState::init_full(oracle, point, evals),
    }
}

fn run<O: MinimaxOracle>(
    oracle: &O,
    x0: &[f64],
    params: &SredaParams,
    streams: &mut RunStreams,
    opts: &RunOptions,
    algorithm: Algorithm,
) -> Result<RunTrace> {
    let (d1, d2) = oracle.dims();
    if x0.len() != d1 {
        return Err(Error::Input(format!("x0 has dimension {}, expected {d1}", x0.len())));
    }
    if opts.diagnostics && !oracle.capabilities().diagnostics() {
        return Err(Error::Capability("diagnostics need exact gradients and the primal function"));
    }
    let mut meta = params_meta(params);
    let mut warnings = Vec::new();
    let mut evals = EvalCounter::new();

    let y0 = match &opts.y0 {
        Some(y) if y.len() == d2 => y.clone(),
        Some(y) => return Err(Error::Input(format!("y0 has dimension {}, expected {d2}", y.len()))),
        None => initialize_y(oracle, x0, params, streams, &mut evals, &mut meta)?,
    };
    let init_evals = evals.physical;
    if opts.diagnostics {
        let g = oracle.exact_grad(&Iterate::new(x0.to_vec(), y0.clone()))?;
        let d0 = linalg::norm_sq(&g.gy);
        meta.insert("init_delta".into(), d0);
        if d0 > params.zeta {
            warnings.push(format!("initializer reached ||grad_y f||^2 = {d0:.3e} > zeta = {:.3e}", params.zeta));
        }
    }

    let k_total = opts.iteration_cap.map_or(params.k, |cap| cap.min(params.k));
    let capped = k_total < params.k;
    let hat_index = if k_total == 0 { 0 } else { streams.index.index(k_total as usize) as u64 };

    let mut x: Vec1 = x0.to_vec();
    let mut y: Vec2 = y0;
    let mut x_hat = x.clone();
    let mut carried: Option<(Vec1, Vec2)> = None;
    let mut rows = Vec::with_capacity(k_total as usize + 1);
    let mut path = opts.record_path.then(Vec::new);

    for k in 0..k_total {
        let (v, u) = if k % params.q == 0 {
            let st = restart(oracle, Iterate::new(x.clone(), y.clone()), params, streams, evals)?;
            evals = st.evals;
            (st.v, st.u)
        } else {
            carried.take().expect("inner result from the previous step")
        };
        let v_norm = linalg::norm(&v);
        let eta = step_size(params, v_norm);

        let mut row = TraceRow::new(k, &evals);
        row.eta = Some(eta);
        row.v_norm = Some(v_norm);
        row.u_norm = Some(linalg::norm(&u));
        if opts.diagnostics {
            record_diagnostics(oracle, &x, &y, Some((v.as_slice(), u.as_slice())), &mut row)?;
        }
        rows.push(row);
        if let Some(p) = path.as_mut() {
            p.push(Iterate::new(x.clone(), y.clone()));
        }
        if k == hat_index {
            x_hat = x.clone();
        }

        let x_next = linalg::axpy(-eta, &v, &x);
        let inner = concave_maximizer(
            oracle,
            &x,
            &x_next,
            &y,
            &v,
            &u,
            params.lambda,
            params.m as usize,
            params.s2 as usize,
            &mut streams.inner,
            &mut streams.index,
            &mut evals,
            false,
        );
        x = x_next;
        y = inner.y_next;
        carried = Some((inner.v_next, inner.u_next));
        if !linalg::all_finite(&x) || !linalg::all_finite(&y) {
            return Err(Error::Input(format!("iterate diverged at k = {k}")));
        }
    }

    let mut last = TraceRow::new(k_total, &evals);
    if opts.diagnostics {
        record_diagnostics(oracle, &x, &y, None, &mut last)?;
    }
    rows.push(last);
    if let Some(p) = path.as_mut() {
        p.push(Iterate::new(x.clone(), y.clone()));
    }
    if capped {
        warnings.push(format!("iteration cap {k_total} < K = {}; bound not certified", params.k));
    }

    Ok(RunTrace {
        algorithm,
        rows,
        x_hat,
        x_hat_index: hat_index,
        x_final: x,
        y_final: y,
        init_evals,
        inner_evals: 0,
        evals,
        k_requested: params.k,
        bound_certified: !capped,
        warnings,
        meta,
        path,
    })
}

fn params_meta(p: &SredaParams) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("epsilon".to_string(), p.epsilon),
        ("zeta".to_string(), p.zeta),
        ("lambda".to_string(), p.lambda),
        ("q".to_string(), p.q as f64),
        ("s1".to_string(), p.s1 as f64),
        ("s2".to_string(), p.s2 as f64),
        ("k".to_string(), p.k as f64),
        ("m".to_string(), p.m as f64),
        ("eta_num".to_string(), p.eta_num),
        ("eta_cap".to_string(), p.eta_cap),
        ("bound".to_string(), p.bound),
    ])
}
