//! Builds problems and parameter sets from a config and executes seeds on a
//! worker pool.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sreda_core::metrics::{evals_to_tolerance, stationarity, ComplexityCurve};
use sreda_core::params::{derive_params, derive_params_finite, BaselineParams, SredaParams, BOUND_CONSTANT};
use sreda_core::problems::{make_quadratic_saddle, QuadraticSaddle};
use sreda_core::{
    delta_f_exact, sgda_run, sgdmax_run, sreda_finite_run, sreda_run, Algorithm, MinimaxOracle, RunOptions, RunStreams,
    RunTrace, SmoothnessProfile,
};

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::output::{trace_csv, write_atomic, write_json};

#[derive(Clone, Debug, PartialEq)]
pub enum Plan {
    Sreda(SredaParams),
    Baseline(BaselineParams),
}

/// A fully resolved experiment: instance, start point and parameters.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub problem: QuadraticSaddle,
    pub x0: Vec<f64>,
    pub delta_f: f64,
    pub plan: Plan,
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<QuadraticSaddle, HarnessError> {
    let p = &cfg.problem;
    let inst = make_quadratic_saddle(p.d1, p.d2, p.kappa, p.seed, p.noise)
        .map_err(|e| HarnessError::Parse(format!("problem: {e}")))?;
    Ok(inst.with_opaque(p.opaque))
}

impl Experiment {
    pub fn resolve(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        let problem = build_problem(cfg)?;
        if cfg.diagnostics && !problem.capabilities().diagnostics() {
            return Err(HarnessError::Capability(
                "diagnostics requested on a problem without closed forms; pass --no-diagnostics".into(),
            ));
        }
        let x0 = cfg.problem.x0.clone().unwrap_or_else(|| problem.start_point(cfg.problem.start_gap, cfg.problem.seed));
        let prof = problem.profile();
        let zeta = cfg.overrides.zeta.unwrap_or((cfg.epsilon / prof.kappa).powi(2));
        let delta_f = match cfg.delta_f {
            Some(d) => d,
            None => delta_f_exact(&problem, &x0, zeta).map_err(|_| {
                HarnessError::Capability("delta_f cannot be computed for this problem; set it in the config".into())
            })?,
        };
        let plan = match cfg.algorithm {
            Algorithm::Sreda => {
                let mut p = derive_params(cfg.epsilon, &prof, delta_f)?;
                cfg.apply_sreda(&mut p);
                Plan::Sreda(p)
            }
            Algorithm::SredaFinite => {
                let n = problem.num_components().ok_or_else(|| HarnessError::Capability("sreda-finite needs a finite sum".into()))?;
                let mut p = derive_params_finite(cfg.epsilon, &prof, delta_f, n)?;
                cfg.apply_sreda(&mut p);
                Plan::Sreda(p)
            }
            Algorithm::Sgda => {
                let mut p = BaselineParams::sgda(cfg.epsilon, &prof)?;
                cfg.apply_baseline(&mut p);
                Plan::Baseline(p)
            }
            Algorithm::Sgdmax => {
                let mut p = BaselineParams::sgdmax(cfg.epsilon, &prof, cfg.inner_cap)?;
                cfg.apply_baseline(&mut p);
                Plan::Baseline(p)
            }
        };
        Ok(Self { problem, x0, delta_f, plan })
    }

    pub fn run_seed(&self, cfg: &ExperimentConfig, seed: u64) -> Result<RunTrace, HarnessError> {
        let opts = RunOptions { diagnostics: cfg.diagnostics, iteration_cap: cfg.cap, ..RunOptions::default() };
        let mut streams = RunStreams::new(seed);
        let p = &self.problem;
        let trace = match (&self.plan, cfg.algorithm) {
            (Plan::Sreda(sp), Algorithm::Sreda) => sreda_run(p, &self.x0, sp, &mut streams, &opts)?,
            (Plan::Sreda(sp), Algorithm::SredaFinite) => sreda_finite_run(p, &self.x0, sp, &mut streams, &opts)?,
            (Plan::Baseline(bp), Algorithm::Sgda) => sgda_run(p, &self.x0, bp, cfg.epsilon, &mut streams, &opts)?,
            (Plan::Baseline(bp), Algorithm::Sgdmax) => sgdmax_run(p, &self.x0, bp, cfg.epsilon, &mut streams, &opts)?,
            _ => unreachable!("plan matches the algorithm"),
        };
        Ok(trace)
    }
}

/// Worker pool sized by `SREDA_THREADS` (default: all cores).
pub fn pool() -> Result<rayon::ThreadPool, HarnessError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SREDA_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| HarnessError::Parse(format!("SREDA_THREADS='{v}' is not a count")))?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| HarnessError::Io(std::io::Error::other(e)))
}

/// Runs every seed of `cfg` in parallel; traces come back in seed order.
pub fn run_seeds(cfg: &ExperimentConfig, exp: &Experiment) -> Result<Vec<RunTrace>, HarnessError> {
    pool()?.install(|| cfg.seeds.par_iter().map(|&s| exp.run_seed(cfg, s)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
        Self { mean, std }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub csv: String,
    pub x_hat: Vec<f64>,
    pub x_hat_index: u64,
    pub phi_grad_norm: f64,
    pub evals_physical: u64,
    pub evals_paper: u64,
    pub init_evals: u64,
    pub inner_evals: u64,
    pub bound_certified: bool,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub delta_f: f64,
    /// `(1073/108)·ε`, the certified bound on `E‖∇Φ(x̂)‖`.
    pub bound: f64,
    pub bound_certified: bool,
    /// `exact`, `inner-solve`, or `estimate` (mean `‖v_k‖ + (4/3)ε`, not a
    /// measurement).
    pub stationarity_method: String,
    pub seeds: Vec<u64>,
    pub phi_grad_norm: Stat,
    pub evals_physical: Stat,
    pub evals_paper: Stat,
    pub profile: SmoothnessProfile,
    pub params: BTreeMap<String, f64>,
    pub runs: Vec<RunSummary>,
}

fn final_stationarity<O: MinimaxOracle>(problem: &O, trace: &RunTrace, eps: f64) -> Result<(f64, String), HarnessError> {
    match stationarity(problem, &trace.x_hat, eps / 100.0) {
        Ok(r) => {
            let label = serde_json::to_value(r.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            Ok((r.phi_grad_norm, label))
        }
        Err(sreda_core::Error::Capability(_)) => {
            let v = trace.column_mean(|r| r.v_norm).unwrap_or(0.0);
            Ok((v + 4.0 / 3.0 * eps, "estimate".into()))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn summarize(cfg: &ExperimentConfig, exp: &Experiment, traces: &[RunTrace]) -> Result<Summary, HarnessError> {
    let mut runs = Vec::with_capacity(traces.len());
    let mut method = String::new();
    for (&seed, t) in cfg.seeds.iter().zip(traces) {
        let (g, m) = final_stationarity(&exp.problem, t, cfg.epsilon)?;
        method = m;
        runs.push(RunSummary {
            seed,
            csv: csv_name(cfg.algorithm, seed),
            x_hat: t.x_hat.clone(),
            x_hat_index: t.x_hat_index,
            phi_grad_norm: g,
            evals_physical: t.evals.physical,
            evals_paper: t.evals.paper,
            init_evals: t.init_evals,
            inner_evals: t.inner_evals,
            bound_certified: t.bound_certified,
            warnings: t.warnings.clone(),
        });
    }
    let col = |f: fn(&RunSummary) -> f64| Stat::of(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(Summary {
        algorithm: cfg.algorithm,
        epsilon: cfg.epsilon,
        delta_f: exp.delta_f,
        bound: BOUND_CONSTANT * cfg.epsilon,
        bound_certified: runs.iter().all(|r| r.bound_certified),
        stationarity_method: method,
        seeds: cfg.seeds.clone(),
        phi_grad_norm: col(|r| r.phi_grad_norm),
        evals_physical: col(|r| r.evals_physical as f64),
        evals_paper: col(|r| r.evals_paper as f64),
        profile: exp.problem.profile(),
        params: traces[0].meta.clone(),
        runs,
    })
}

pub fn csv_name(alg: Algorithm, seed: u64) -> String {
    format!("{alg}_seed{seed}.csv")
}

/// `run` subcommand: traces, instance and summary under `cfg.out`.
pub fn execute_run(cfg: &ExperimentConfig) -> Result<Summary, HarnessError> {
    let exp = Experiment::resolve(cfg)?;
    let traces = run_seeds(cfg, &exp)?;
    for (&seed, t) in cfg.seeds.iter().zip(&traces) {
        write_atomic(&cfg.out.join(csv_name(cfg.algorithm, seed)), &trace_csv(t)?)?;
    }
    write_json(&cfg.out.join("problem.json"), &exp.problem)?;
    let summary = summarize(cfg, &exp, &traces)?;
    write_json(&summary_path(cfg), &summary)?;
    Ok(summary)
}

pub fn summary_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.join(format!("{}_summary.json", cfg.algorithm))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    /// Seed-averaged evals to first reach `‖∇Φ(x_k)‖ ≤ ε`; `None` if any
    /// seed never did.
    pub evals_mean: Option<f64>,
    pub per_seed: Vec<Option<u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub algorithm: Algorithm,
    pub points: Vec<SweepPoint>,
    pub slope: Option<f64>,
    pub slope_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub seeds: Vec<u64>,
    pub curves: Vec<SweepCurve>,
}

/// Runs each algorithm at each `ε` with diagnostics on and fits the
/// evals-to-stationarity slope. Parameter overrides are not carried over.
pub fn sweep(cfg: &ExperimentConfig, epsilons: &[f64], algorithms: &[Algorithm]) -> Result<SweepSummary, HarnessError> {
    if epsilons.is_empty() || algorithms.is_empty() {
        return Err(HarnessError::Parse("sweep needs at least one epsilon and one algorithm".into()));
    }
    let mut curves = Vec::new();
    for &alg in algorithms {
        let mut points = Vec::new();
        for &eps in epsilons {
            let c = ExperimentConfig {
                algorithm: alg,
                epsilon: eps,
                diagnostics: true,
                overrides: Default::default(),
                ..cfg.clone()
            };
            c.validate()?;
            let exp = Experiment::resolve(&c)?;
            let traces = run_seeds(&c, &exp)?;
            let per_seed = traces.iter().map(|t| evals_to_tolerance(t, eps)).collect::<Result<Vec<_>, _>>()?;
            let evals_mean = per_seed
                .iter()
                .copied()
                .collect::<Option<Vec<u64>>>()
                .map(|v| v.iter().map(|&n| n as f64).sum::<f64>() / v.len() as f64);
            points.push(SweepPoint { epsilon: eps, evals_mean, per_seed });
        }
        let curve = ComplexityCurve { points: points.iter().map(|p| (p.epsilon, p.evals_mean.map(|m| m.round() as u64))).collect() };
        let (slope, slope_error) = match curve.fit_slope() {
            Ok(s) => (Some(s), None),
            Err(e) => (None, Some(e.to_string())),
        };
        curves.push(SweepCurve { algorithm: alg, points, slope, slope_error });
    }
    Ok(SweepSummary { seeds: cfg.seeds.clone(), curves })
}

pub fn execute_sweep(cfg: &ExperimentConfig, epsilons: &[f64], algorithms: &[Algorithm]) -> Result<SweepSummary, HarnessError> {
    let s = sweep(cfg, epsilons, algorithms)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Io(std::io::Error::other(e));
    w.write_record(["algorithm", "epsilon", "seed", "evals_to_tolerance"]).map_err(csv_err)?;
    for c in &s.curves {
        for p in &c.points {
            for (seed, n) in s.seeds.iter().zip(&p.per_seed) {
                w.write_record([c.algorithm.to_string(), p.epsilon.to_string(), seed.to_string(), n.map(|n| n.to_string()).unwrap_or_default()])
                    .map_err(csv_err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(std::io::Error::other(e.to_string())))?;
    write_atomic(&cfg.out.join("sweep.csv"), &bytes)?;
    write_json(&cfg.out.join("sweep_summary.json"), &s)?;
    Ok(s)
}
