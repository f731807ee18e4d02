//! Acceptance criteria. Each test prints one `[PASS]` / `[FAIL]` line; run
//! with `--nocapture` to see them all.

use std::sync::OnceLock;

use sreda_core::inner::{concave_maximizer, isarah, isarah_auto_config, sarah, InitConfig};
use sreda_core::linalg;
use sreda_core::metrics::stationarity;
use sreda_core::oracle::ConvexOracle;
use sreda_core::params::derive_params;
use sreda_core::problems::{make_quadratic_saddle, ConvexQuadratic, NoiseSpec, QuadraticSaddle};
use sreda_core::rng::{spawn_stream, RngStream, StreamPurpose};
use sreda_core::{
    delta_f_exact, derive_params_finite, sreda_finite_run, sreda_run, Algorithm, EvalCounter, Iterate, MinimaxOracle,
    RunOptions, RunStreams, RunTrace,
};
use sreda_harness::runner::{execute_run, sweep};
use sreda_harness::ExperimentConfig;

fn report(id: u32, what: &str, passed: bool, detail: String) {
    println!("[{}] criterion {id:>2} ({what}): {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "criterion {id} failed: {detail}");
}

const EPS: f64 = 0.2;
const SEEDS: u64 = 10;

fn desk_problem() -> QuadraticSaddle {
    make_quadratic_saddle(5, 5, 5.0, 7, NoiseSpec::Gaussian { sigma: 0.5 }).unwrap()
}

struct DeskRuns {
    problem: QuadraticSaddle,
    traces: Vec<RunTrace>,
    zeta: f64,
    k: u64,
    s1: u64,
}

fn desk_runs() -> &'static DeskRuns {
    static RUNS: OnceLock<DeskRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let problem = desk_problem();
        let prof = problem.profile();
        let x0 = problem.start_point(1.0, 7);
        let zeta = (EPS / prof.kappa).powi(2);
        let params = derive_params(EPS, &prof, delta_f_exact(&problem, &x0, zeta).unwrap()).unwrap();
        let traces = (0..SEEDS)
            .map(|s| sreda_run(&problem, &x0, &params, &mut RunStreams::new(s), &RunOptions::default()).unwrap())
            .collect();
        DeskRuns { problem, traces, zeta, k: params.k, s1: params.s1 }
    })
}

#[test]
fn criterion_01_desk_scale_stationarity_bound() {
    let runs = desk_runs();
    let prof = runs.problem.profile();
    assert!((prof.ell - 1.0).abs() < 1e-9 && (prof.mu - 0.2).abs() < 1e-9);
    let mean = runs
        .traces
        .iter()
        .map(|t| stationarity(&runs.problem, &t.x_hat, 1e-6).unwrap().phi_grad_norm)
        .sum::<f64>()
        / SEEDS as f64;
    let bound = 1073.0 / 108.0 * EPS;
    let certified = runs.traces.iter().all(|t| t.bound_certified);
    report(
        1,
        "desk-scale stationarity bound",
        mean <= bound && certified,
        format!("K = {}, S1 = {}, mean |grad Phi(x_hat)| = {mean:.4} <= {bound:.4}", runs.k, runs.s1),
    );
}

#[test]
fn criterion_02_tracking_errors_stay_small() {
    let runs = desk_runs();
    let kappa = runs.problem.profile().kappa;
    let delta_bound = 2.0 * EPS * EPS / (kappa * kappa);
    let big_bound = 2.0 * (1.0 / 12.0) * EPS * EPS / (kappa * kappa);
    let rows = runs.traces[0].rows.len() - 1;
    let (mut worst_d, mut worst_dd) = (0.0_f64, 0.0_f64);
    for k in 0..rows {
        let avg = |f: fn(&sreda_core::TraceRow) -> Option<f64>| {
            runs.traces.iter().map(|t| f(&t.rows[k]).unwrap()).sum::<f64>() / SEEDS as f64
        };
        worst_d = worst_d.max(avg(|r| r.delta_k));
        worst_dd = worst_dd.max(avg(|r| r.big_delta_k));
    }
    assert!((runs.zeta - EPS * EPS / (kappa * kappa)).abs() < 1e-15);
    report(
        2,
        "inner-gradient and estimator error",
        worst_d <= delta_bound && worst_dd <= big_bound,
        format!("max_k delta = {worst_d:.3e} <= {delta_bound:.3e}, max_k Delta = {worst_dd:.3e} <= {big_bound:.3e}"),
    );
}

#[test]
fn criterion_03_epsilon_scaling() {
    let cfg = ExperimentConfig::from_json(
        r#"{
        "problem": {"kind": "quadratic_saddle", "d1": 5, "d2": 5, "kappa": 5.0,
                    "noise": {"mode": "gaussian", "sigma": 0.5}, "seed": 7},
        "algorithm": "sreda", "epsilon": 0.2, "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
    }"#,
    )
    .unwrap();
    let s = sweep(&cfg, &[0.4, 0.2, 0.1], &[Algorithm::Sreda, Algorithm::Sgda]).unwrap();
    let slope = |a: Algorithm| s.curves.iter().find(|c| c.algorithm == a).and_then(|c| c.slope);
    let (sreda, sgda) = (slope(Algorithm::Sreda), slope(Algorithm::Sgda));
    let passed = match (sreda, sgda) {
        (Some(a), Some(b)) => a <= b - 0.5 && (2.0..=4.0).contains(&a),
        _ => false,
    };
    report(
        3,
        "epsilon scaling",
        passed,
        format!("slope SREDA = {sreda:.3?}, slope SGDA = {sgda:.3?}; need SREDA in [2, 4] and <= SGDA - 0.5"),
    );
}

#[test]
fn criterion_04_initializer_contracts() {
    let mut lines = Vec::new();
    let mut passed = true;
    for (name, n) in [("iSARAH", None), ("SARAH", Some(40usize))] {
        let prob = ConvexQuadratic::random(8, 4.0, 17, 1.0, n).unwrap();
        for zeta in [1e-2, 1e-3] {
            let mut total = 0.0;
            for seed in 0..20 {
                let mut rng = spawn_stream(seed, StreamPurpose::Init);
                let mut evals = EvalCounter::new();
                let w0 = vec![0.0; 8];
                let w = match n {
                    None => {
                        let cfg = isarah_auto_config(&prob, &w0, zeta, &mut rng, &mut evals);
                        isarah(&prob, &w0, &cfg, &mut rng, &mut evals)
                    }
                    Some(n) => {
                        let g0 = prob.full_grad(&w0, &mut evals).unwrap();
                        let cfg = InitConfig::sarah(&prob.profile, zeta, linalg::norm_sq(&g0), n);
                        sarah(&prob, &w0, &cfg, &mut rng, &mut evals).unwrap()
                    }
                };
                total += linalg::norm_sq(&prob.exact_grad(&w).unwrap());
            }
            let mean = total / 20.0;
            passed &= mean <= 1.5 * zeta;
            lines.push(format!("{name} zeta={zeta:e}: {mean:.2e}"));
        }
    }
    report(4, "initializer accuracy", passed, format!("mean |grad h|^2 <= 1.5 zeta; {}", lines.join(", ")));
}

/// Deterministic SREDA with restarts every step, unit inner batch and no
/// noise, written directly on the matrices of `p`. Returns `(x_k, y_k)` for
/// `k = 0..=iters`.
fn brute_force(p: &QuadraticSaddle, x0: &[f64], y0: &[f64], eps: f64, iters: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let (d1, d2) = (x0.len(), y0.len());
    let kappa = p.profile.kappa;
    let ell = p.profile.ell;
    let lambda = 2.0 / (7.0 * ell);
    let m = (28.0 * kappa - 1.0).ceil() as usize;
    let gx = |x: &[f64], y: &[f64]| -> Vec<f64> {
        (0..d1)
            .map(|i| (0..d1).map(|j| p.a.data[i * d1 + j] * x[j]).sum::<f64>() + (0..d2).map(|j| p.b.data[i * d2 + j] * y[j]).sum::<f64>())
            .collect()
    };
    let gy = |x: &[f64], y: &[f64]| -> Vec<f64> {
        (0..d2).map(|j| (0..d1).map(|i| p.b.data[i * d2 + j] * x[i]).sum::<f64>() - p.mu * y[j] + p.c[j]).collect()
    };
    let mut index = RngStream::new(seed, 4);
    let _ = index.index(iters);
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut out = vec![(x.clone(), y.clone())];
    for _ in 0..iters {
        let v = gx(&x, &y);
        let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let eta = (eps / (5.0 * kappa * ell * vn)).min(1.0 / (10.0 * kappa * ell));
        for i in 0..d1 {
            x[i] -= eta * v[i];
        }
        let s = index.index_inclusive(m);
        for _ in 0..=s {
            let u = gy(&x, &y);
            for j in 0..d2 {
                y[j] += lambda * u[j];
            }
        }
        out.push((x.clone(), y.clone()));
    }
    out
}

#[test]
fn criterion_05_noiseless_trajectory_equivalence() {
    let p = make_quadratic_saddle(4, 3, 4.0, 19, NoiseSpec::Gaussian { sigma: 0.0 }).unwrap();
    let x0 = p.start_point(1.0, 3);
    let y0 = vec![0.3, -0.1, 0.2];
    let mut params = derive_params(EPS, &p.profile(), 1.0).unwrap();
    params.q = 1;
    params.s2 = 1;
    params.k = 200;
    let opts = RunOptions { y0: Some(y0.clone()), record_path: true, ..RunOptions::default() };
    let seed = 11;
    let t = sreda_run(&p, &x0, &params, &mut RunStreams::new(seed), &opts).unwrap();
    let path = t.path.unwrap();
    let reference = brute_force(&p, &x0, &y0, EPS, 200, seed);
    assert_eq!(path.len(), reference.len());
    let worst = path
        .iter()
        .zip(&reference)
        .flat_map(|(a, (rx, ry))| a.x.iter().zip(rx).chain(a.y.iter().zip(ry)).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max);
    report(5, "noiseless trajectory equivalence", worst <= 1e-12, format!("max coordinate gap over 200 iterations = {worst:.2e}"));
}

#[test]
fn criterion_06_inner_u_decay() {
    let p = make_quadratic_saddle(4, 4, 5.0, 23, NoiseSpec::FiniteSum { n: 12, spread: 0.5 }).unwrap();
    let prof = p.profile();
    let lambda = 2.0 / (7.0 * prof.ell);
    let rate = 1.0 - 2.0 * prof.mu * prof.ell * lambda / (prof.mu + prof.ell);
    let mut starts = RngStream::new(6, 60);
    let mut sq = [0.0; 7];
    for r in 0..500 {
        let pt = Iterate::new(starts.normal_vec(4, 1.0), starts.normal_vec(4, 1.0));
        let g = p.exact_grad(&pt).unwrap();
        let out = concave_maximizer(
            &p, &pt.x, &pt.x, &pt.y, &g.gx, &g.gy, lambda, 5, 1,
            &mut RngStream::new(r, 61), &mut RngStream::new(r, 62), &mut EvalCounter::new(), true,
        );
        for (s, u) in sq.iter_mut().zip(out.trace.unwrap().u_norms) {
            *s += u * u / 500.0;
        }
    }
    let worst = (1..=5).map(|t| sq[t] / (rate * sq[t - 1] * 1.1)).fold(0.0, f64::max);
    report(6, "inner u-decay", worst <= 1.0, format!("max_t E|u_t|^2 / (1.1 rate E|u_t-1|^2) = {worst:.4}"));
}

#[test]
fn criterion_07_increment_unbiased() {
    let p = make_quadratic_saddle(4, 3, 5.0, 29, NoiseSpec::FiniteSum { n: 10, spread: 0.6 }).unwrap();
    let mut rng = RngStream::new(7, 70);
    let old = Iterate::new(rng.normal_vec(4, 1.0), rng.normal_vec(3, 1.0));
    let new = Iterate::new(rng.normal_vec(4, 1.0), rng.normal_vec(3, 1.0));
    let truth = p.exact_grad(&new).unwrap().minus(&p.exact_grad(&old).unwrap());
    let truth: Vec<f64> = truth.gx.iter().chain(&truth.gy).copied().collect();
    let reps = 10_000;
    let draws: Vec<Vec<f64>> = (0..reps)
        .map(|_| {
            let d = p.paired_batch_diff(&new, &old, 1, &mut rng, &mut EvalCounter::new());
            d.gx.into_iter().chain(d.gy).collect()
        })
        .collect();
    let mut worst = 0.0_f64;
    for (j, t) in truth.iter().enumerate() {
        let mean = draws.iter().map(|d| d[j]).sum::<f64>() / reps as f64;
        let var = draws.iter().map(|d| (d[j] - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        worst = worst.max((mean - t).abs() / (4.0 * (var / reps as f64).sqrt() + 1e-15));
    }
    report(7, "estimator increment unbiased", worst <= 1.0, format!("max |mean - truth| / (4 sd) over 10^4 reps = {worst:.3}"));
}

#[test]
fn criterion_08_finite_sum_exact_estimates() {
    let p = make_quadratic_saddle(4, 3, 5.0, 31, NoiseSpec::FiniteSum { n: 10, spread: 0.5 }).unwrap();
    let x0 = p.start_point(1.0, 31);
    let eps = 0.5;
    let zeta = (eps / p.profile().kappa).powi(2);
    let params = derive_params_finite(eps, &p.profile(), delta_f_exact(&p, &x0, zeta).unwrap(), 10).unwrap();
    let mut nonzero = 0;
    let mut rows = 0;
    for seed in 0..3 {
        let t = sreda_finite_run(&p, &x0, &params, &mut RunStreams::new(seed), &RunOptions::default()).unwrap();
        for r in &t.rows[..t.rows.len() - 1] {
            rows += 1;
            if r.big_delta_k != Some(0.0) {
                nonzero += 1;
            }
        }
    }
    report(
        8,
        "finite-sum single-step period",
        params.q == 1 && nonzero == 0,
        format!("q = {}, S2 = {}, rows with Delta_k != 0: {nonzero} of {rows}", params.q, params.s2),
    );
}

#[test]
fn criterion_09_gradient_correctness() {
    let h = 1e-5;
    let mut rng = RngStream::new(9, 90);
    let mut fd_worst = 0.0_f64;
    let mut lip_worst = 0.0_f64;
    for p in [desk_problem(), make_quadratic_saddle(5, 4, 5.0, 37, NoiseSpec::FiniteSum { n: 15, spread: 0.5 }).unwrap()] {
        let (d1, d2) = p.dims();
        for _ in 0..100 {
            let pt = Iterate::new(rng.normal_vec(d1, 1.0), rng.normal_vec(d2, 1.0));
            let xi = p.draw(&mut rng);
            let g = p.sample_grad(&pt, &xi);
            let analytic: Vec<f64> = g.gx.iter().chain(&g.gy).copied().collect();
            let mut err = 0.0;
            for (i, a) in analytic.iter().enumerate() {
                let (mut up, mut dn) = (pt.clone(), pt.clone());
                if i < d1 {
                    up.x[i] += h;
                    dn.x[i] -= h;
                } else {
                    up.y[i - d1] += h;
                    dn.y[i - d1] -= h;
                }
                let fd = (p.sample_value(&up, &xi) - p.sample_value(&dn, &xi)) / (2.0 * h);
                err += (fd - a).powi(2);
            }
            fd_worst = fd_worst.max(err.sqrt() / linalg::norm(&analytic).max(1.0));
        }
        let prof = p.profile();
        for _ in 0..10_000 {
            let (x, x2) = (rng.normal_vec(d1, 1.0), rng.normal_vec(d1, 1.0));
            let diff = linalg::norm(&linalg::sub(&p.phi_grad(&x).unwrap(), &p.phi_grad(&x2).unwrap()));
            lip_worst = lip_worst.max(diff / linalg::dist_sq(&x, &x2).sqrt() / (prof.ell + prof.kappa * prof.ell));
        }
    }
    report(
        9,
        "gradient correctness",
        fd_worst <= 1e-6 && lip_worst <= 1.0 + 1e-6,
        format!("max FD rel err = {fd_worst:.2e}, max Lipschitz ratio / (l + kappa l) = {lip_worst:.4}"),
    );
}

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
        "problem": {"kind": "quadratic_saddle", "d1": 4, "d2": 4, "kappa": 4.0,
                    "noise": {"mode": "gaussian", "sigma": 0.5}, "seed": 3},
        "algorithm": "sreda", "epsilon": 0.4, "seeds": [0, 1, 2, 3]
    }"#;
    let mut cfg = ExperimentConfig::from_json(text).unwrap();
    cfg.out = dir.path().join("a");
    execute_run(&cfg).unwrap();
    cfg.out = dir.path().join("b");
    execute_run(&cfg).unwrap();
    let mut identical = 0;
    for seed in &cfg.seeds {
        let name = format!("sreda_seed{seed}.csv");
        let a = std::fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(&name)).unwrap();
        if a == b && !a.is_empty() {
            identical += 1;
        }
    }
    report(10, "determinism", identical == cfg.seeds.len(), format!("{identical} of {} trace CSVs byte-identical", cfg.seeds.len()));
}
