//! Oracle interfaces, gradient pairs and oracle-call accounting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Vec1, Vec2};
use crate::rng::RngStream;

/// A point `(x, y)` of the minimax problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub x: Vec1,
    pub y: Vec2,
}

impl Iterate {
    pub fn new(x: Vec1, y: Vec2) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        linalg::all_finite(&self.x) && linalg::all_finite(&self.y)
    }

    pub fn dist_sq(&self, other: &Iterate) -> f64 {
        linalg::dist_sq(&self.x, &other.x) + linalg::dist_sq(&self.y, &other.y)
    }
}

/// Partial gradients `(∇_x F, ∇_y F)` of one component, or an average of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradPair {
    pub gx: Vec1,
    pub gy: Vec2,
}

impl GradPair {
    pub fn zeros(d1: usize, d2: usize) -> Self {
        Self { gx: vec![0.0; d1], gy: vec![0.0; d2] }
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &GradPair) {
        linalg::axpy_in_place(alpha, &other.gx, &mut self.gx);
        linalg::axpy_in_place(alpha, &other.gy, &mut self.gy);
    }

    pub fn scale(&mut self, alpha: f64) {
        self.gx.iter_mut().chain(self.gy.iter_mut()).for_each(|v| *v *= alpha);
    }

    pub fn minus(&self, other: &GradPair) -> GradPair {
        GradPair { gx: linalg::sub(&self.gx, &other.gx), gy: linalg::sub(&self.gy, &other.gy) }
    }

    pub fn norm_sq(&self) -> f64 {
        linalg::norm_sq(&self.gx) + linalg::norm_sq(&self.gy)
    }

    pub fn is_finite(&self) -> bool {
        linalg::all_finite(&self.gx) && linalg::all_finite(&self.gy)
    }
}

/// Number of stochastic-gradient oracle calls.
///
/// `physical` counts one call per component gradient-pair evaluation at one
/// point, so a common-random-number correction of batch `S` costs `2S`.
/// `paper` charges such a correction `S`, the nominal count used by the
/// complexity bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounter {
    pub physical: u64,
    pub paper: u64,
}

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Evaluations of `n` components at a single point each.
    pub fn add_single(&mut self, n: u64) {
        self.physical += n;
        self.paper += n;
    }

    /// `batch` samples each evaluated at two points.
    pub fn add_paired(&mut self, batch: u64) {
        self.physical += 2 * batch;
        self.paper += batch;
    }

    pub fn count(&self) -> u64 {
        self.physical
    }
}

/// Constants of the smoothness, concavity and variance assumptions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessProfile {
    pub ell: f64,
    pub mu: f64,
    pub sigma: f64,
    pub kappa: f64,
}

impl SmoothnessProfile {
    pub fn new(ell: f64, mu: f64, sigma: f64) -> Result<Self> {
        if !(mu > 0.0) || !(ell >= mu) || !(sigma >= 0.0) || !ell.is_finite() || !sigma.is_finite() {
            return Err(Error::Input(format!(
                "invalid smoothness profile: ell={ell}, mu={mu}, sigma={sigma} (need ell >= mu > 0, sigma >= 0)"
            )));
        }
        Ok(Self { ell, mu, sigma, kappa: ell / mu })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub has_exact_grad: bool,
    pub has_y_star: bool,
    pub has_phi: bool,
    pub is_finite_sum: bool,
}

impl Capabilities {
    pub fn diagnostics(&self) -> bool {
        self.has_exact_grad && self.has_phi
    }
}

/// A sampled minimax objective `f(x, y) = E[F(x, y; ξ)]`.
///
/// Implementors supply uncounted primitives; solvers go through the provided
/// methods, which charge the [`EvalCounter`].
pub trait MinimaxOracle: Sync {
    type Sample: Clone + Send;

    fn dims(&self) -> (usize, usize);
    fn profile(&self) -> SmoothnessProfile;
    fn capabilities(&self) -> Capabilities;

    fn num_components(&self) -> Option<usize> {
        None
    }

    /// Draws a random instance `ξ`. Finite-sum oracles draw a uniform index.
    fn draw(&self, rng: &mut RngStream) -> Self::Sample;

    /// `G(p; ξ)`, uncounted.
    fn sample_grad(&self, p: &Iterate, xi: &Self::Sample) -> GradPair;

    /// The `i`-th component of a finite sum (zero-based).
    fn index_sample(&self, i: usize) -> Result<Self::Sample> {
        let _ = i;
        Err(Error::Capability("component indexing requires a finite-sum oracle"))
    }

    /// Exact `∇f(p)`, never charged. Diagnostics only.
    fn exact_grad(&self, p: &Iterate) -> Result<GradPair> {
        let _ = p;
        Err(Error::Capability("exact gradient not available"))
    }

    /// Exact `f(x, y)`.
    fn value(&self, p: &Iterate) -> Result<f64> {
        let _ = p;
        Err(Error::Capability("objective value not available"))
    }

    fn y_star(&self, x: &[f64]) -> Result<Vec2> {
        let _ = x;
        Err(Error::Capability("closed-form maximizer not available"))
    }

    fn phi_value(&self, x: &[f64]) -> Result<f64> {
        let _ = x;
        Err(Error::Capability("primal function not available"))
    }

    fn phi_grad(&self, x: &[f64]) -> Result<Vec1> {
        let _ = x;
        Err(Error::Capability("primal gradient not available"))
    }

    /// `min_x Φ(x)` when known.
    fn phi_min(&self) -> Option<f64> {
        None
    }

    /// Batch average `(1/S) Σ G(p; ξ_i)` over `batch` i.i.d. draws.
    fn stoch_grad(&self, p: &Iterate, batch: usize, rng: &mut RngStream, evals: &mut EvalCounter) -> GradPair {
        assert!(batch >= 1, "batch size must be at least 1");
        let (d1, d2) = self.dims();
        let mut acc = GradPair::zeros(d1, d2);
        for _ in 0..batch {
            let xi = self.draw(rng);
            acc.add_scaled(1.0, &self.sample_grad(p, &xi));
        }
        acc.scale(1.0 / batch as f64);
        evals.add_single(batch as u64);
        acc
    }

    /// `G(p; ξ)` and, when `paired` is given, `G(paired; ξ)` with the same `ξ`.
    fn component_grad(
        &self,
        p: &Iterate,
        xi: &Self::Sample,
        paired: Option<&Iterate>,
        evals: &mut EvalCounter,
    ) -> (GradPair, Option<GradPair>) {
        let g = self.sample_grad(p, xi);
        match paired {
            Some(q) => {
                evals.add_paired(1);
                (g, Some(self.sample_grad(q, xi)))
            }
            None => {
                evals.add_single(1);
                (g, None)
            }
        }
    }

    /// Exact gradient charged at `n` calls for finite sums; free for analytic
    /// oracles (diagnostic use only).
    fn full_grad(&self, p: &Iterate, evals: &mut EvalCounter) -> Result<GradPair> {
        if let Some(n) = self.num_components() {
            let g = finite_sum_average(self, p)?;
            evals.add_single(n as u64);
            Ok(g)
        } else if self.capabilities().has_exact_grad {
            self.exact_grad(p)
        } else {
            Err(Error::Capability("full gradient needs a finite-sum or analytic oracle"))
        }
    }

    /// `(1/S) Σ [G(new; ξ_i) − G(old; ξ_i)]` with common random numbers.
    /// Charges `2S` physical calls.
    fn paired_batch_diff(
        &self,
        new: &Iterate,
        old: &Iterate,
        batch: usize,
        rng: &mut RngStream,
        evals: &mut EvalCounter,
    ) -> GradPair {
        assert!(batch >= 1, "batch size must be at least 1");
        let (d1, d2) = self.dims();
        let mut acc = GradPair::zeros(d1, d2);
        for _ in 0..batch {
            let xi = self.draw(rng);
            let (a, b) = self.component_grad(new, &xi, Some(old), evals);
            acc.add_scaled(1.0, &a);
            acc.add_scaled(-1.0, &b.expect("paired evaluation"));
        }
        acc.scale(1.0 / batch as f64);
        acc
    }
}

/// `(1/n) Σ_i G(p; ξ_i)` summed in index order.
pub fn finite_sum_average<O: MinimaxOracle + ?Sized>(oracle: &O, p: &Iterate) -> Result<GradPair> {
    let n = oracle
        .num_components()
        .ok_or(Error::Capability("component average requires a finite-sum oracle"))?;
    let (d1, d2) = oracle.dims();
    let mut acc = GradPair::zeros(d1, d2);
    for i in 0..n {
        let xi = oracle.index_sample(i)?;
        acc.add_scaled(1.0, &oracle.sample_grad(p, &xi));
    }
    acc.scale(1.0 / n as f64);
    Ok(acc)
}

/// A sampled strongly convex objective `h(w) = E[H(w; ξ)]`, the problem the
/// SARAH-family initializers solve.
pub trait ConvexOracle: Sync {
    type Sample: Clone + Send;

    fn dim(&self) -> usize;
    /// `ell` is the (average) gradient-Lipschitz constant, `mu` the strong
    /// convexity modulus of `h`.
    fn profile(&self) -> SmoothnessProfile;

    fn num_components(&self) -> Option<usize> {
        None
    }

    fn draw(&self, rng: &mut RngStream) -> Self::Sample;
    fn sample_grad(&self, w: &[f64], xi: &Self::Sample) -> Vec<f64>;

    fn index_sample(&self, i: usize) -> Result<Self::Sample> {
        let _ = i;
        Err(Error::Capability("component indexing requires a finite-sum oracle"))
    }

    /// Exact `∇h(w)`, uncounted.
    fn exact_grad(&self, w: &[f64]) -> Result<Vec<f64>> {
        let _ = w;
        Err(Error::Capability("exact gradient not available"))
    }

    /// Exact minimizer when known.
    fn minimizer(&self) -> Option<Vec<f64>> {
        None
    }

    fn batch_grad(&self, w: &[f64], batch: usize, rng: &mut RngStream, evals: &mut EvalCounter) -> Vec<f64> {
        assert!(batch >= 1, "batch size must be at least 1");
        let mut acc = vec![0.0; self.dim()];
        for _ in 0..batch {
            let xi = self.draw(rng);
            linalg::axpy_in_place(1.0, &self.sample_grad(w, &xi), &mut acc);
        }
        evals.add_single(batch as u64);
        linalg::scale(1.0 / batch as f64, &acc)
    }

    /// Average over all components, charged `n`.
    fn full_grad(&self, w: &[f64], evals: &mut EvalCounter) -> Result<Vec<f64>> {
        let n = self
            .num_components()
            .ok_or(Error::Capability("full gradient requires a finite-sum oracle"))?;
        let mut acc = vec![0.0; self.dim()];
        for i in 0..n {
            let xi = self.index_sample(i)?;
            linalg::axpy_in_place(1.0, &self.sample_grad(w, &xi), &mut acc);
        }
        evals.add_single(n as u64);
        Ok(linalg::scale(1.0 / n as f64, &acc))
    }

    fn paired_batch_diff(
        &self,
        new: &[f64],
        old: &[f64],
        batch: usize,
        rng: &mut RngStream,
        evals: &mut EvalCounter,
    ) -> Vec<f64> {
        assert!(batch >= 1, "batch size must be at least 1");
        let mut acc = vec![0.0; self.dim()];
        for _ in 0..batch {
            let xi = self.draw(rng);
            linalg::axpy_in_place(1.0, &self.sample_grad(new, &xi), &mut acc);
            linalg::axpy_in_place(-1.0, &self.sample_grad(old, &xi), &mut acc);
        }
        evals.add_paired(batch as u64);
        linalg::scale(1.0 / batch as f64, &acc)
    }
}

/// `h(w) = −f(x, w)` at a fixed `x`: the strongly convex slice the SREDA
/// initializers minimize.
pub struct NegSlice<'a, O: MinimaxOracle> {
    oracle: &'a O,
    x: Vec1,
}

impl<'a, O: MinimaxOracle> NegSlice<'a, O> {
    pub fn new(oracle: &'a O, x: Vec1) -> Self {
        assert_eq!(x.len(), oracle.dims().0, "slice point dimension");
        Self { oracle, x }
    }

    fn at(&self, w: &[f64]) -> Iterate {
        Iterate::new(self.x.clone(), w.to_vec())
    }
}

impl<O: MinimaxOracle> ConvexOracle for NegSlice<'_, O> {
    type Sample = O::Sample;

    fn dim(&self) -> usize {
        self.oracle.dims().1
    }

    fn profile(&self) -> SmoothnessProfile {
        self.oracle.profile()
    }

    fn num_components(&self) -> Option<usize> {
        self.oracle.num_components()
    }

    fn draw(&self, rng: &mut RngStream) -> Self::Sample {
        self.oracle.draw(rng)
    }

    fn sample_grad(&self, w: &[f64], xi: &Self::Sample) -> Vec<f64> {
        linalg::scale(-1.0, &self.oracle.sample_grad(&self.at(w), xi).gy)
    }

    fn index_sample(&self, i: usize) -> Result<Self::Sample> {
        self.oracle.index_sample(i)
    }

    fn exact_grad(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(linalg::scale(-1.0, &self.oracle.exact_grad(&self.at(w))?.gy))
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        self.oracle.y_star(&self.x).ok()
    }

    fn paired_batch_diff(
        &self,
        new: &[f64],
        old: &[f64],
        batch: usize,
        rng: &mut RngStream,
        evals: &mut EvalCounter,
    ) -> Vec<f64> {
        let d = self.oracle.paired_batch_diff(&self.at(new), &self.at(old), batch, rng, evals);
        linalg::scale(-1.0, &d.gy)
    }
}
