//! Property suite behind the `check` subcommand.

use sreda_core::inner::concave_maximizer;
use sreda_core::linalg;
use sreda_core::params::derive_params;
use sreda_core::problems::{make_quadratic_saddle, NoiseSpec, QuadraticSaddle};
use sreda_core::rng::{RngStream, StreamPurpose, spawn_stream};
use sreda_core::{derive_params_finite, sreda_finite_run, sreda_run, EvalCounter, Iterate, MinimaxOracle, RunOptions, RunStreams};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

fn problems(seed: u64) -> [QuadraticSaddle; 2] {
    [
        make_quadratic_saddle(4, 3, 5.0, seed, NoiseSpec::Gaussian { sigma: 0.5 }).expect("valid instance"),
        make_quadratic_saddle(4, 3, 5.0, seed + 1, NoiseSpec::FiniteSum { n: 8, spread: 0.4 }).expect("valid instance"),
    ]
}

fn random_point(rng: &mut RngStream, d1: usize, d2: usize) -> Iterate {
    Iterate::new(rng.normal_vec(d1, 1.0), rng.normal_vec(d2, 1.0))
}

fn finite_differences(seed: u64) -> CheckResult {
    let h = 1e-5;
    let mut worst = 0.0_f64;
    let mut rng = RngStream::new(seed, 100);
    for p in problems(seed) {
        let (d1, d2) = p.dims();
        for _ in 0..100 {
            let pt = random_point(&mut rng, d1, d2);
            let xi = p.draw(&mut rng);
            let g = p.sample_grad(&pt, &xi);
            let analytic: Vec<f64> = g.gx.iter().chain(&g.gy).copied().collect();
            let fd: Vec<f64> = (0..d1 + d2)
                .map(|i| {
                    let (mut a, mut b) = (pt.clone(), pt.clone());
                    if i < d1 {
                        a.x[i] += h;
                        b.x[i] -= h;
                    } else {
                        a.y[i - d1] += h;
                        b.y[i - d1] -= h;
                    }
                    (p.sample_value(&a, &xi) - p.sample_value(&b, &xi)) / (2.0 * h)
                })
                .collect();
            worst = worst.max(linalg::norm(&linalg::sub(&fd, &analytic)) / linalg::norm(&analytic).max(1.0));
        }
    }
    CheckResult::new("gradient finite differences", worst <= 1e-6, format!("max rel err {worst:.2e} (limit 1e-6)"))
}

fn concavity_and_pl(seed: u64) -> [CheckResult; 2] {
    let mut rng = RngStream::new(seed, 101);
    let (mut sc_ok, mut pl_ok) = (true, true);
    for p in problems(seed) {
        let (d1, d2) = p.dims();
        let mu = p.profile().mu;
        for _ in 0..100 {
            let a = random_point(&mut rng, d1, d2);
            let y2 = rng.normal_vec(d2, 1.0);
            let b = Iterate::new(a.x.clone(), y2.clone());
            let gb = p.exact_grad(&b).expect("closed form").gy;
            let rhs = p.value(&b).expect("closed form") + linalg::dot(&gb, &linalg::sub(&a.y, &y2)) - 0.5 * mu * linalg::dist_sq(&a.y, &y2);
            sc_ok &= p.value(&a).expect("closed form") <= rhs + 1e-10;
            let ys = p.y_star(&a.x).expect("closed form");
            let gap = p.value(&Iterate::new(a.x.clone(), ys)).expect("closed form") - p.value(&a).expect("closed form");
            let ga = p.exact_grad(&a).expect("closed form").gy;
            pl_ok &= 2.0 * mu * gap <= linalg::norm_sq(&ga) * (1.0 + 1e-10) + 1e-12;
        }
    }
    [
        CheckResult::new("strong concavity in y", sc_ok, "100 triples per problem".into()),
        CheckResult::new("PL inequality of -f(x, .)", pl_ok, "100 points per problem".into()),
    ]
}

fn primal_lipschitz(seed: u64) -> CheckResult {
    let mut rng = RngStream::new(seed, 102);
    let mut worst = 0.0_f64;
    for p in problems(seed) {
        let prof = p.profile();
        let bound = prof.ell + prof.kappa * prof.ell;
        for _ in 0..10_000 {
            let (x, x2) = (rng.normal_vec(p.d1(), 1.0), rng.normal_vec(p.d1(), 1.0));
            let num = linalg::norm(&linalg::sub(&p.phi_grad(&x).expect("closed form"), &p.phi_grad(&x2).expect("closed form")));
            let r = num / linalg::dist_sq(&x, &x2).sqrt() / bound;
            worst = worst.max(r);
        }
    }
    CheckResult::new("primal gradient Lipschitz", worst <= 1.0 + 1e-6, format!("max ratio / (l + kappa l) = {worst:.4}"))
}

fn u_decay(seed: u64) -> CheckResult {
    let p = &problems(seed)[1];
    let prof = p.profile();
    let lambda = 2.0 / (7.0 * prof.ell);
    let rate = 1.0 - 2.0 * prof.mu * prof.ell * lambda / (prof.mu + prof.ell);
    let mut rng = RngStream::new(seed, 103);
    let mut sums = [0.0; 7];
    for r in 0..500u64 {
        let pt = random_point(&mut rng, 4, 3);
        let g = p.exact_grad(&pt).expect("closed form");
        let out = concave_maximizer(
            p,
            &pt.x,
            &pt.x,
            &pt.y,
            &g.gx,
            &g.gy,
            lambda,
            5,
            1,
            &mut RngStream::new(seed.wrapping_add(r), 104),
            &mut RngStream::new(seed.wrapping_add(r), 105),
            &mut EvalCounter::new(),
            true,
        );
        for (s, u) in sums.iter_mut().zip(out.trace.expect("recorded").u_norms) {
            *s += u * u;
        }
    }
    let worst = (1..=5).map(|t| sums[t] / (rate * sums[t - 1])).fold(0.0, f64::max);
    CheckResult::new("inner u-decay", worst <= 1.1, format!("max E|u_t|^2 / (rate E|u_t-1|^2) = {worst:.4} (limit 1.1)"))
}

fn martingale(seed: u64) -> CheckResult {
    let p = &problems(seed)[1];
    let mut rng = RngStream::new(seed, 106);
    let old = random_point(&mut rng, 4, 3);
    let new = random_point(&mut rng, 4, 3);
    let truth = p.exact_grad(&new).expect("closed form").minus(&p.exact_grad(&old).expect("closed form"));
    let t: Vec<f64> = truth.gx.iter().chain(&truth.gy).copied().collect();
    let reps = 10_000;
    let draws: Vec<Vec<f64>> = (0..reps)
        .map(|_| {
            let d = p.paired_batch_diff(&new, &old, 1, &mut rng, &mut EvalCounter::new());
            d.gx.iter().chain(&d.gy).copied().collect()
        })
        .collect();
    let mut worst = 0.0_f64;
    for j in 0..t.len() {
        let mean = draws.iter().map(|d| d[j]).sum::<f64>() / reps as f64;
        let var = draws.iter().map(|d| (d[j] - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        worst = worst.max((mean - t[j]).abs() / (4.0 * (var / reps as f64).sqrt() + 1e-12));
    }
    CheckResult::new("estimator increment unbiased", worst <= 1.0, format!("max |bias| / 4 sd = {worst:.3}"))
}

fn finite_sum_exact(seed: u64) -> CheckResult {
    let p = &problems(seed)[1];
    let x0 = p.start_point(1.0, seed);
    let params = derive_params_finite(0.5, &p.profile(), 1.0, 8).expect("valid params");
    let opts = RunOptions { iteration_cap: Some(50), ..RunOptions::default() };
    let t = sreda_finite_run(p, &x0, &params, &mut RunStreams::new(seed), &opts).expect("run");
    let nonzero = t.rows.iter().filter(|r| r.big_delta_k.is_some_and(|d| d != 0.0)).count();
    CheckResult::new("finite-sum q = 1 estimator exact", params.q == 1 && nonzero == 0, format!("q = {}, rows with Delta_k != 0: {nonzero}", params.q))
}

/// Deterministic SREDA (q = 1, S2 = 1, σ = 0) written out directly on the
/// problem matrices.
#[allow(clippy::too_many_arguments)]
fn reference_path(p: &QuadraticSaddle, x0: &[f64], y0: &[f64], eta_num: f64, eta_cap: f64, lambda: f64, m: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let grad = |x: &[f64], y: &[f64]| {
        let gx = linalg::add(&p.a.mul_vec(x), &p.b.mul_vec(y));
        let gy: Vec<f64> = p.b.mul_t_vec(x).iter().zip(y).zip(&p.c).map(|((bx, yi), ci)| bx - p.mu * yi + ci).collect();
        (gx, gy)
    };
    let mut idx = spawn_stream(seed, StreamPurpose::IndexSk);
    let _hat = idx.index(k);
    let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
    let mut xs = vec![x.clone()];
    for _ in 0..k {
        let (v, _) = grad(&x, &y);
        let nv = linalg::norm(&v);
        let eta = if nv > 0.0 { (eta_num / nv).min(eta_cap) } else { eta_cap };
        x = linalg::axpy(-eta, &v, &x);
        let s = idx.index_inclusive(m);
        let mut yt = y.clone();
        for _ in 0..=s {
            let (_, u) = grad(&x, &yt);
            yt = linalg::axpy(lambda, &u, &yt);
        }
        y = yt;
        xs.push(x.clone());
    }
    xs
}

fn oracle_equivalence(seed: u64) -> CheckResult {
    let p = make_quadratic_saddle(3, 3, 3.0, seed, NoiseSpec::Gaussian { sigma: 0.0 }).expect("valid instance");
    let x0 = p.start_point(1.0, seed);
    let y0 = vec![0.1, -0.2, 0.3];
    let mut params = derive_params(0.2, &p.profile(), 1.0).expect("valid params");
    params.q = 1;
    params.s2 = 1;
    params.k = 200;
    let opts = RunOptions { diagnostics: false, y0: Some(y0.clone()), record_path: true, ..RunOptions::default() };
    let t = sreda_run(&p, &x0, &params, &mut RunStreams::new(seed), &opts).expect("run");
    let path = t.path.expect("recorded");
    let reference = reference_path(&p, &x0, &y0, params.eta_num, params.eta_cap, params.lambda, params.m as usize, 200, seed);
    let worst = path
        .iter()
        .zip(&reference)
        .flat_map(|(a, b)| a.x.iter().zip(b).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max);
    CheckResult::new("noiseless trajectory matches reference", worst <= 1e-12, format!("max coordinate gap {worst:.2e} over 200 iterations"))
}

/// Runs the whole suite.
pub fn run_checks(seed: u64) -> Vec<CheckResult> {
    let mut out = vec![finite_differences(seed)];
    out.extend(concavity_and_pl(seed));
    out.push(primal_lipschitz(seed));
    out.push(u_decay(seed));
    out.push(martingale(seed));
    out.push(finite_sum_exact(seed));
    out.push(oracle_equivalence(seed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_default_seed() {
        for r in run_checks(1) {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
