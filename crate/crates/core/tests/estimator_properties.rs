use proptest::prelude::*;
use sreda_core::estimator::EstimatorState;
use sreda_core::inner::concave_maximizer;
use sreda_core::linalg;
use sreda_core::oracle::{EvalCounter, Iterate, MinimaxOracle};
use sreda_core::problems::{make_quadratic_saddle, NoiseSpec, QuadraticSaddle};
use sreda_core::rng::{spawn_stream, RngStream, StreamPurpose};

fn finite() -> QuadraticSaddle {
    make_quadratic_saddle(3, 3, 4.0, 21, NoiseSpec::FiniteSum { n: 10, spread: 0.5 }).unwrap()
}

#[test]
fn increment_is_conditionally_unbiased() {
    let p = finite();
    let old = Iterate::new(vec![0.2, -0.1, 0.4], vec![0.0, 0.3, -0.2]);
    let new = Iterate::new(vec![0.5, 0.1, 0.2], vec![-0.1, 0.2, 0.1]);
    let truth = p.exact_grad(&new).unwrap().minus(&p.exact_grad(&old).unwrap());
    let reps = 10_000;
    let mut rng = spawn_stream(1, StreamPurpose::InnerBatch);
    let mut draws: Vec<Vec<f64>> = Vec::with_capacity(reps);
    for _ in 0..reps {
        let d = p.paired_batch_diff(&new, &old, 1, &mut rng, &mut EvalCounter::new());
        draws.push(d.gx.iter().chain(&d.gy).copied().collect());
    }
    let t: Vec<f64> = truth.gx.iter().chain(&truth.gy).copied().collect();
    for j in 0..t.len() {
        let mean = draws.iter().map(|d| d[j]).sum::<f64>() / reps as f64;
        let var = draws.iter().map(|d| (d[j] - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let slack = 4.0 * (var / reps as f64).sqrt() + 1e-12;
        assert!((mean - t[j]).abs() <= slack, "coordinate {j}: {mean} vs {}", t[j]);
    }
}

#[test]
fn u_decays_geometrically_in_expectation() {
    let p = finite();
    let prof = p.profile();
    let lambda = 2.0 / (7.0 * prof.ell);
    let rate = 1.0 - 2.0 * prof.mu * prof.ell * lambda / (prof.mu + prof.ell);
    let mut seeds = spawn_stream(2, StreamPurpose::Baseline);
    let mut sums = [0.0; 7];
    for r in 0..500 {
        let x = seeds.normal_vec(3, 1.0);
        let y = seeds.normal_vec(3, 1.0);
        let g = p.exact_grad(&Iterate::new(x.clone(), y.clone())).unwrap();
        let mut batch = RngStream::new(r, 3);
        let mut idx = RngStream::new(r, 4);
        let out = concave_maximizer(&p, &x, &x, &y, &g.gx, &g.gy, lambda, 5, 1, &mut batch, &mut idx, &mut EvalCounter::new(), true);
        for (s, u) in sums.iter_mut().zip(out.trace.unwrap().u_norms) {
            *s += u * u;
        }
    }
    for t in 1..=5 {
        assert!(sums[t] <= rate * sums[t - 1] * 1.1, "t = {t}: {} vs {}", sums[t], sums[t - 1]);
    }
}

#[test]
fn inner_output_index_is_uniform() {
    let p = finite();
    let m = 4;
    let mut counts = [0usize; 5];
    let mut batch = spawn_stream(7, StreamPurpose::InnerBatch);
    let mut idx = spawn_stream(7, StreamPurpose::IndexSk);
    let draws = 5_000;
    for _ in 0..draws {
        let r = concave_maximizer(&p, &[0.0; 3], &[0.0; 3], &[0.0; 3], &[0.0; 3], &[0.0; 3], 0.1, m, 1, &mut batch, &mut idx, &mut EvalCounter::new(), false);
        counts[r.s_k] += 1;
    }
    let expect = draws as f64 / 5.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    // 99.9% quantile of chi-square with 4 degrees of freedom.
    assert!(chi2 < 18.47, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn inner_call_charges_two_s2_per_step() {
    let p = finite();
    let mut ev = EvalCounter::new();
    concave_maximizer(&p, &[0.0; 3], &[0.1; 3], &[0.0; 3], &[0.0; 3], &[0.0; 3], 0.1, 6, 3, &mut RngStream::new(0, 1), &mut RngStream::new(0, 2), &mut ev, false);
    assert_eq!(ev.physical, 2 * 3 * (6 + 2));
    assert_eq!(ev.paper, 3 * (6 + 2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn restart_error_shrinks_with_batch(seed in 0u64..1000) {
        let p = make_quadratic_saddle(3, 3, 4.0, 5, NoiseSpec::Gaussian { sigma: 1.0 }).unwrap();
        let pt = Iterate::new(vec![0.1; 3], vec![0.2; 3]);
        let mut big = 0.0;
        let mut small = 0.0;
        for r in 0..40 {
            let mut rng = RngStream::new(seed * 100 + r, 2);
            small += EstimatorState::init_restart(&p, pt.clone(), 4, &mut rng, EvalCounter::new()).squared_error(&p).unwrap();
            big += EstimatorState::init_restart(&p, pt.clone(), 400, &mut rng, EvalCounter::new()).squared_error(&p).unwrap();
        }
        prop_assert!(big < small);
    }

    #[test]
    fn recursive_update_telescopes_on_finite_sums(steps in prop::collection::vec(prop::collection::vec(-0.2..0.2f64, 6), 1..10), seed in 0u64..100) {
        // A single component makes every correction exact.
        let p = make_quadratic_saddle(3, 3, 4.0, 8, NoiseSpec::FiniteSum { n: 1, spread: 0.0 }).unwrap();
        let mut pt = Iterate::new(vec![0.0; 3], vec![0.0; 3]);
        let mut st = EstimatorState::init_full(&p, pt.clone(), EvalCounter::new()).unwrap();
        let mut rng = RngStream::new(seed, 3);
        for s in steps {
            pt = Iterate::new(linalg::add(&pt.x, &s[..3]), linalg::add(&pt.y, &s[3..]));
            st.recursive_update(&p, pt.clone(), 2, &mut rng);
        }
        prop_assert!(st.squared_error(&p).unwrap() < 1e-24);
    }
}
