//! Inner solvers: the concave maximizer run after every outer step, and the
//! SARAH-family initializers for `y₀`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimator::EstimatorState;
use crate::linalg::{self, Vec1, Vec2};
use crate::oracle::{ConvexOracle, EvalCounter, Iterate, MinimaxOracle, SmoothnessProfile};
use crate::rng::RngStream;

/// Per-step record of one concave-maximizer call, for lemma checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InnerTrace {
    /// `‖ũ_t‖` for `t = 0..=m+1`.
    pub u_norms: Vec<f64>,
    /// `ỹ_t` for `t = 0..=m+1`.
    pub y_path: Vec<Vec2>,
    /// `x̃_t` for `t = 0..=m+1`.
    pub x_path: Vec<Vec1>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerResult {
    pub y_next: Vec2,
    pub v_next: Vec1,
    pub u_next: Vec2,
    pub s_k: usize,
    pub trace: Option<InnerTrace>,
}

/// Gradient ascent on `y` with `x` frozen at `x_new`, carrying the recursive
/// estimator along.
///
/// `(v_in, u_in)` estimate `∇f(x_prev, y_cur)`. The first correction moves the
/// estimate to `(x_new, y_cur)`; then `m + 1` ascent steps follow, each
/// corrected with a fresh `s2` batch. The returned iterate and estimates sit
/// at index `s_k + 1` with `s_k` uniform on `{0, …, m}` (drawn from
/// `index_rng`). Charges `2·s2·(m+2)` physical oracle calls.
#[allow(clippy::too_many_arguments)]
pub fn concave_maximizer<O: MinimaxOracle>(
    oracle: &O,
    x_prev: &[f64],
    x_new: &[f64],
    y_cur: &[f64],
    v_in: &[f64],
    u_in: &[f64],
    lambda: f64,
    m: usize,
    s2: usize,
    batch_rng: &mut RngStream,
    index_rng: &mut RngStream,
    evals: &mut EvalCounter,
    record: bool,
) -> InnerResult {
    let prof = oracle.profile();
    if lambda > 2.0 / (prof.mu + prof.ell) {
        warn!("inner step {lambda} exceeds 2/(mu+ell) = {}; u-decay is not guaranteed", 2.0 / (prof.mu + prof.ell));
    }
    let s_k = index_rng.index_inclusive(m);
    let mut trace = record.then(InnerTrace::default);

    let mut state = EstimatorState::from_parts(
        v_in.to_vec(),
        u_in.to_vec(),
        Iterate::new(x_prev.to_vec(), y_cur.to_vec()),
        *evals,
    );
    let mut y = y_cur.to_vec();
    state.recursive_update(oracle, Iterate::new(x_new.to_vec(), y.clone()), s2, batch_rng);
    if let Some(tr) = trace.as_mut() {
        tr.u_norms.push(linalg::norm(&state.u));
        tr.y_path.push(y.clone());
        tr.x_path.push(state.anchor.x.clone());
    }

    let mut out: Option<(Vec2, Vec1, Vec2)> = None;
    for t in 1..=m + 1 {
        y = linalg::axpy(lambda, &state.u, &y);
        state.recursive_update(oracle, Iterate::new(x_new.to_vec(), y.clone()), s2, batch_rng);
        if let Some(tr) = trace.as_mut() {
            tr.u_norms.push(linalg::norm(&state.u));
            tr.y_path.push(y.clone());
            tr.x_path.push(state.anchor.x.clone());
        }
        if t == s_k + 1 {
            out = Some((y.clone(), state.v.clone(), state.u.clone()));
        }
    }
    *evals = state.evals;
    let (y_next, v_next, u_next) = out.expect("s_k + 1 lies in 1..=m+1");
    InnerResult { y_next, v_next, u_next, s_k, trace }
}

/// Step size, epoch length, anchor batch and epoch count of a SARAH-type
/// initializer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    pub gamma: f64,
    pub m_prime: usize,
    /// Anchor batch; ignored by SARAH, which uses the full gradient.
    pub batch: usize,
    pub epochs: usize,
}

/// Largest anchor batch the automatic iSARAH configuration will request.
pub const ISARAH_BATCH_CAP: usize = 1_000_000;

fn ceil_at_least_one(v: f64) -> usize {
    if v.is_finite() && v > 1.0 {
        v.ceil() as usize
    } else {
        1
    }
}

impl InitConfig {
    /// iSARAH parameters for target `E‖∇h‖² ≤ zeta`.
    ///
    /// `grad_sq_start` is `‖∇h(w̃₀)‖²`; `noise_sq_at_opt` is the mean squared
    /// component gradient at the minimizer, which sets the anchor batch.
    pub fn isarah(profile: &SmoothnessProfile, zeta: f64, grad_sq_start: f64, noise_sq_at_opt: f64) -> Self {
        let kappa = profile.kappa;
        let batch = (20.0 * kappa - 10.0).max(20.0 * noise_sq_at_opt / zeta);
        Self {
            gamma: 2.0 / (5.0 * profile.ell),
            m_prime: ceil_at_least_one(20.0 * kappa - 1.0),
            batch: ceil_at_least_one(batch).min(ISARAH_BATCH_CAP),
            epochs: ceil_at_least_one((4.0 / 3.0 * grad_sq_start / zeta).ln()),
        }
    }

    /// SARAH parameters for a finite sum of `n` components.
    pub fn sarah(profile: &SmoothnessProfile, zeta: f64, grad_sq_start: f64, n: usize) -> Self {
        Self {
            gamma: 1.0 / (2.0 * profile.ell),
            m_prime: ceil_at_least_one(4.5 * profile.kappa),
            batch: n,
            epochs: sarah_epochs(grad_sq_start, zeta),
        }
    }
}

/// `⌈ln(g₀/ζ) / ln(9/7)⌉`, floored at one.
pub fn sarah_epochs(grad_sq_start: f64, zeta: f64) -> usize {
    ceil_at_least_one((grad_sq_start / zeta).ln() / (9.0_f64 / 7.0).ln())
}

/// One SARAH epoch from `w0` given the anchor gradient `v0`.
fn sarah_epoch<C: ConvexOracle>(
    oracle: &C,
    w0: Vec<f64>,
    v0: Vec<f64>,
    cfg: &InitConfig,
    rng: &mut RngStream,
    evals: &mut EvalCounter,
) -> Vec<f64> {
    let mut path = Vec::with_capacity(cfg.m_prime + 1);
    let mut v = v0;
    let mut w = linalg::axpy(-cfg.gamma, &v, &w0);
    path.push(w0);
    for _ in 1..cfg.m_prime {
        let prev = path.last().expect("nonempty path");
        let d = oracle.paired_batch_diff(&w, prev, 1, rng, evals);
        linalg::axpy_in_place(1.0, &d, &mut v);
        let next = linalg::axpy(-cfg.gamma, &v, &w);
        path.push(std::mem::replace(&mut w, next));
    }
    path.push(w);
    let pick = rng.index_inclusive(cfg.m_prime);
    path.swap_remove(pick)
}

/// Inexact SARAH: each epoch anchors on a `cfg.batch`-sample gradient.
pub fn isarah<C: ConvexOracle>(oracle: &C, w0: &[f64], cfg: &InitConfig, rng: &mut RngStream, evals: &mut EvalCounter) -> Vec<f64> {
    let mut w = w0.to_vec();
    for _ in 0..cfg.epochs {
        let v0 = oracle.batch_grad(&w, cfg.batch, rng, evals);
        w = sarah_epoch(oracle, w, v0, cfg, rng, evals);
    }
    w
}

/// SARAH on a finite sum: each epoch anchors on the full gradient.
pub fn sarah<C: ConvexOracle>(
    oracle: &C,
    w0: &[f64],
    cfg: &InitConfig,
    rng: &mut RngStream,
    evals: &mut EvalCounter,
) -> Result<Vec<f64>> {
    let mut w = w0.to_vec();
    for _ in 0..cfg.epochs {
        let v0 = oracle.full_grad(&w, evals)?;
        w = sarah_epoch(oracle, w, v0, cfg, rng, evals);
    }
    Ok(w)
}

/// Samples used to estimate the quantities the iSARAH configuration needs.
pub const ISARAH_PROBE_SAMPLES: usize = 100;

/// Derives an iSARAH configuration from probe batches (charged to `evals`).
///
/// The anchor batch depends on the component gradient energy at the
/// minimizer; when the minimizer is unknown the energy at `w0` stands in.
pub fn isarah_auto_config<C: ConvexOracle>(
    oracle: &C,
    w0: &[f64],
    zeta: f64,
    rng: &mut RngStream,
    evals: &mut EvalCounter,
) -> InitConfig {
    let probe = |w: &[f64], rng: &mut RngStream, evals: &mut EvalCounter| -> (Vec<f64>, f64) {
        let mut mean = vec![0.0; oracle.dim()];
        let mut energy = 0.0;
        for _ in 0..ISARAH_PROBE_SAMPLES {
            let g = oracle.sample_grad(w, &oracle.draw(rng));
            energy += linalg::norm_sq(&g);
            linalg::axpy_in_place(1.0, &g, &mut mean);
        }
        evals.add_single(ISARAH_PROBE_SAMPLES as u64);
        let k = ISARAH_PROBE_SAMPLES as f64;
        (linalg::scale(1.0 / k, &mean), energy / k)
    };
    let (g0, energy0) = probe(w0, rng, evals);
    let noise_sq = match oracle.minimizer() {
        Some(ws) => probe(&ws, rng, evals).1,
        None => energy0,
    };
    InitConfig::isarah(&oracle.profile(), zeta, linalg::norm_sq(&g0), noise_sq)
}
