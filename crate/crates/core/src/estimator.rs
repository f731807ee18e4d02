//! Recursive variance-reduced estimate of the gradient pair.
//!
//! A restart sets `(v, u)` to a large-batch average. Each later move from the
//! anchor `p` to `p'` adds `(1/S₂) Σ [G(p'; ξ_i) − G(p; ξ_i)]` over fresh
//! samples shared between both points, so the estimation error grows with the
//! squared displacement rather than with the raw noise.

use crate::error::Result;
use crate::linalg::{Vec1, Vec2};
use crate::oracle::{EvalCounter, GradPair, Iterate, MinimaxOracle};
use crate::rng::RngStream;

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorState {
    pub v: Vec1,
    pub u: Vec2,
    pub anchor: Iterate,
    pub evals: EvalCounter,
}

impl EstimatorState {
    /// Batch restart at `point` with `s1` samples.
    pub fn init_restart<O: MinimaxOracle>(
        oracle: &O,
        point: Iterate,
        s1: usize,
        rng: &mut RngStream,
        mut evals: EvalCounter,
    ) -> Self {
        let g = oracle.stoch_grad(&point, s1, rng, &mut evals);
        Self { v: g.gx, u: g.gy, anchor: point, evals }
    }

    /// Restart from the exact full gradient of a finite sum (charged `n`).
    pub fn init_full<O: MinimaxOracle>(oracle: &O, point: Iterate, mut evals: EvalCounter) -> Result<Self> {
        let g = oracle.full_grad(&point, &mut evals)?;
        Ok(Self { v: g.gx, u: g.gy, anchor: point, evals })
    }

    /// Wraps externally supplied estimates.
    pub fn from_parts(v: Vec1, u: Vec2, anchor: Iterate, evals: EvalCounter) -> Self {
        Self { v, u, anchor, evals }
    }

    /// Moves the anchor to `new_point`, correcting `(v, u)` with an
    /// `s2`-sample common-random-number difference.
    pub fn recursive_update<O: MinimaxOracle>(&mut self, oracle: &O, new_point: Iterate, s2: usize, rng: &mut RngStream) {
        let d = oracle.paired_batch_diff(&new_point, &self.anchor, s2, rng, &mut self.evals);
        self.apply(&d);
        self.anchor = new_point;
    }

    fn apply(&mut self, d: &GradPair) {
        for (v, dv) in self.v.iter_mut().zip(&d.gx) {
            *v += dv;
        }
        for (u, du) in self.u.iter_mut().zip(&d.gy) {
            *u += du;
        }
    }

    pub fn as_pair(&self) -> GradPair {
        GradPair { gx: self.v.clone(), gy: self.u.clone() }
    }

    /// `‖v − ∇_x f‖² + ‖u − ∇_y f‖²` at the anchor.
    pub fn squared_error<O: MinimaxOracle>(&self, oracle: &O) -> Result<f64> {
        let exact = oracle.exact_grad(&self.anchor)?;
        Ok(self.as_pair().minus(&exact).norm_sq())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::problems::{make_quadratic_saddle, NoiseSpec};
    use crate::rng::{spawn_stream, StreamPurpose};

    #[test]
    fn zero_displacement_leaves_state_unchanged() {
        let p = make_quadratic_saddle(3, 3, 3.0, 1, NoiseSpec::FiniteSum { n: 10, spread: 0.5 }).unwrap();
        let mut rng = spawn_stream(2, StreamPurpose::InnerBatch);
        let pt = Iterate::new(vec![0.1, 0.2, 0.3], vec![-0.1, 0.0, 0.4]);
        let mut st = EstimatorState::init_restart(&p, pt.clone(), 5, &mut rng, EvalCounter::new());
        let before = st.clone();
        st.recursive_update(&p, pt, 4, &mut rng);
        assert_eq!(st.v, before.v);
        assert_eq!(st.u, before.u);
        assert_eq!(st.evals.count(), before.evals.count() + 8);
    }

    #[test]
    fn zero_noise_restart_is_exact() {
        let p = make_quadratic_saddle(3, 2, 3.0, 1, NoiseSpec::Gaussian { sigma: 0.0 }).unwrap();
        let mut rng = spawn_stream(2, StreamPurpose::RestartBatch);
        let pt = Iterate::new(vec![0.5, -0.2, 0.1], vec![1.0, 2.0]);
        let st = EstimatorState::init_restart(&p, pt, 7, &mut rng, EvalCounter::new());
        assert!(st.squared_error(&p).unwrap() < 1e-28);
        assert_eq!(st.evals.count(), 7);
    }

    #[test]
    fn finite_sum_full_restart_has_zero_error() {
        let p = make_quadratic_saddle(3, 2, 3.0, 4, NoiseSpec::FiniteSum { n: 12, spread: 0.5 }).unwrap();
        let pt = Iterate::new(vec![0.5, -0.2, 0.1], vec![1.0, 2.0]);
        let st = EstimatorState::init_full(&p, pt, EvalCounter::new()).unwrap();
        assert_eq!(st.squared_error(&p).unwrap(), 0.0);
        assert_eq!(st.evals.count(), 12);
    }

    #[test]
    fn deterministic_telescope_tracks_gradient() {
        let p = make_quadratic_saddle(4, 3, 5.0, 6, NoiseSpec::Gaussian { sigma: 0.0 }).unwrap();
        let mut rng = spawn_stream(3, StreamPurpose::InnerBatch);
        let mut walk = spawn_stream(4, StreamPurpose::Baseline);
        let mut pt = Iterate::new(vec![0.0; 4], vec![0.0; 3]);
        let mut st = EstimatorState::init_restart(&p, pt.clone(), 1, &mut rng, EvalCounter::new());
        for _ in 0..50 {
            pt = Iterate::new(linalg::axpy(0.1, &walk.normal_vec(4, 1.0), &pt.x), linalg::axpy(0.1, &walk.normal_vec(3, 1.0), &pt.y));
            st.recursive_update(&p, pt.clone(), 1, &mut rng);
            let exact = p.exact_grad(&pt).unwrap();
            for (a, b) in st.v.iter().chain(&st.u).zip(exact.gx.iter().chain(&exact.gy)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert_eq!(st.evals.count(), 1 + 50 * 2);
    }
}
