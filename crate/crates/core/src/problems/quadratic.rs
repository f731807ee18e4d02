//! Quadratic saddle problems with closed-form maximizer and primal function.
//!
//! `f(x, y) = ½ xᵀAx + xᵀBy − (μ/2)‖y‖² + cᵀy`, with `A` symmetric and in
//! general indefinite. The maximizer is `y*(x) = (Bᵀx + c)/μ` and the primal
//! function `Φ(x) = ½ xᵀAx + ‖Bᵀx + c‖²/(2μ)` has gradient
//! `Ax + B(Bᵀx + c)/μ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vec1, Vec2};
use crate::oracle::{
    finite_sum_average, Capabilities, EvalCounter, GradPair, Iterate, MinimaxOracle, SmoothnessProfile,
};
use crate::rng::RngStream;

/// One term `(A_i, B_i, c_i)` of a finite-sum instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleComponent {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Vec2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NoiseModel {
    /// Additive isotropic Gaussian noise of per-coordinate std `sigma_g` on both
    /// partial gradients.
    Gaussian { sigma_g: f64 },
    /// `f` is the uniform average of the listed components.
    FiniteSum { components: Vec<SaddleComponent> },
}

/// How to generate the noise of a random instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// `sigma` is the declared total std, `σ_g·√(d1+d2)`.
    Gaussian { sigma: f64 },
    /// `n` components whose matrices deviate from the mean by relative `spread`.
    FiniteSum { n: usize, spread: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum SaddleSample {
    Noise(Vec<f64>),
    Index(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSaddle {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Vec2,
    pub mu: f64,
    pub noise: NoiseModel,
    pub profile: SmoothnessProfile,
    /// Generation seed, when the instance was drawn at random.
    pub seed: Option<u64>,
    /// Hides the closed forms so callers see a black-box oracle.
    #[serde(default)]
    pub opaque: bool,
    /// `min Φ`, when `A + BBᵀ/μ` is positive definite.
    pub phi_star: Option<f64>,
    pub x_star: Option<Vec1>,
}

impl QuadraticSaddle {
    /// Builds an instance from explicit matrices. `ell` defaults to the
    /// spectral norm of the block Hessian (or its mean-square counterpart for
    /// finite sums).
    pub fn new(a: Matrix, b: Matrix, c: Vec2, mu: f64, noise: NoiseModel, ell: Option<f64>) -> Result<Self> {
        let (d1, d2) = (a.rows, c.len());
        if a.cols != d1 || b.rows != d1 || b.cols != d2 {
            return Err(Error::Input("inconsistent matrix dimensions".into()));
        }
        if !(mu > 0.0) {
            return Err(Error::Input(format!("mu must be positive, got {mu}")));
        }
        let (lipschitz, sigma) = match &noise {
            NoiseModel::Gaussian { sigma_g } => {
                (block_hessian_norm(&a, &b, mu), sigma_g * ((d1 + d2) as f64).sqrt())
            }
            NoiseModel::FiniteSum { components } => {
                if components.is_empty() {
                    return Err(Error::Input("finite sum needs at least one component".into()));
                }
                (mean_square_hessian_norm(components, mu), 0.0)
            }
        };
        let ell = ell.unwrap_or(lipschitz).max(mu);
        let mut out = Self {
            a,
            b,
            c,
            mu,
            noise,
            profile: SmoothnessProfile::new(ell, mu, sigma)?,
            seed: None,
            opaque: false,
            phi_star: None,
            x_star: None,
        };
        out.solve_phi_min();
        if let NoiseModel::FiniteSum { .. } = out.noise {
            out.profile.sigma = out.estimate_component_sigma(0x5EED_5A3A);
        }
        Ok(out)
    }

    /// Finite sum built from explicit components; the mean defines `f`.
    pub fn from_components(components: Vec<SaddleComponent>, mu: f64, ell: Option<f64>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Input("finite sum needs at least one component".into()))?;
        let (d1, d2) = (first.a.rows, first.c.len());
        let n = components.len() as f64;
        let mut a = Matrix::zeros(d1, d1);
        let mut b = Matrix::zeros(d1, d2);
        let mut c = vec![0.0; d2];
        for comp in &components {
            a = a.plus(&comp.a);
            b = b.plus(&comp.b);
            linalg::axpy_in_place(1.0, &comp.c, &mut c);
        }
        Self::new(a.scaled(1.0 / n), b.scaled(1.0 / n), linalg::scale(1.0 / n, &c), mu, NoiseModel::FiniteSum { components }, ell)
    }

    pub fn d1(&self) -> usize {
        self.a.rows
    }

    pub fn d2(&self) -> usize {
        self.c.len()
    }

    pub fn with_opaque(mut self, opaque: bool) -> Self {
        self.opaque = opaque;
        self
    }

    fn analytic_grad(a: &Matrix, b: &Matrix, c: &[f64], mu: f64, p: &Iterate) -> GradPair {
        let gx = linalg::add(&a.mul_vec(&p.x), &b.mul_vec(&p.y));
        let mut gy = b.mul_t_vec(&p.x);
        for ((g, yi), ci) in gy.iter_mut().zip(&p.y).zip(c) {
            *g += ci - mu * yi;
        }
        GradPair { gx, gy }
    }

    /// `Φ`'s Hessian `A + BBᵀ/μ`.
    pub fn phi_hessian(&self) -> Matrix {
        self.a.plus(&self.b.matmul(&self.b.transpose()).scaled(1.0 / self.mu))
    }

    fn solve_phi_min(&mut self) {
        let p = self.phi_hessian().to_nalgebra();
        let rhs = nalgebra::DVector::from_vec(linalg::scale(-1.0 / self.mu, &self.b.mul_vec(&self.c)));
        if let Some(chol) = p.cholesky() {
            let xs: Vec<f64> = chol.solve(&rhs).iter().copied().collect();
            self.phi_star = Some(self.phi_closed(&xs));
            self.x_star = Some(xs);
        }
    }

    fn phi_closed(&self, x: &[f64]) -> f64 {
        let r = linalg::add(&self.b.mul_t_vec(x), &self.c);
        0.5 * linalg::dot(x, &self.a.mul_vec(x)) + linalg::norm_sq(&r) / (2.0 * self.mu)
    }

    /// A start point with `Φ(x0) − Φ* = gap`, along a seeded random direction.
    /// Falls back to a standard normal draw when `Φ*` is unknown.
    pub fn start_point(&self, gap: f64, seed: u64) -> Vec1 {
        let mut rng = RngStream::new(seed, 0xC0FFEE);
        let mut dir = rng.normal_vec(self.d1(), 1.0);
        let nd = linalg::norm(&dir);
        dir.iter_mut().for_each(|v| *v /= nd);
        match &self.x_star {
            Some(xs) => {
                let curv = linalg::dot(&dir, &self.phi_hessian().mul_vec(&dir));
                let r = (2.0 * gap / curv).sqrt();
                linalg::axpy(r, &dir, xs)
            }
            None => dir,
        }
    }

    /// Largest empirical component variance over 1000 standard normal points.
    fn estimate_component_sigma(&self, seed: u64) -> f64 {
        let NoiseModel::FiniteSum { components } = &self.noise else {
            return self.profile.sigma;
        };
        let mut rng = RngStream::new(seed, 0x51C3A);
        let (d1, d2) = (self.d1(), self.d2());
        let mut worst = 0.0_f64;
        for _ in 0..1000 {
            let p = Iterate::new(rng.normal_vec(d1, 1.0), rng.normal_vec(d2, 1.0));
            let mean = Self::analytic_grad(&self.a, &self.b, &self.c, self.mu, &p);
            let var = components
                .iter()
                .map(|comp| Self::analytic_grad(&comp.a, &comp.b, &comp.c, self.mu, &p).minus(&mean).norm_sq())
                .sum::<f64>()
                / components.len() as f64;
            worst = worst.max(var);
        }
        worst.sqrt()
    }

    /// `F(p; ξ)`, the sampled objective whose gradient is `sample_grad`.
    pub fn sample_value(&self, p: &Iterate, xi: &SaddleSample) -> f64 {
        let quad = |a: &Matrix, b: &Matrix, c: &[f64]| {
            0.5 * linalg::dot(&p.x, &a.mul_vec(&p.x)) + linalg::dot(&p.x, &b.mul_vec(&p.y))
                - 0.5 * self.mu * linalg::norm_sq(&p.y)
                + linalg::dot(c, &p.y)
        };
        match (&self.noise, xi) {
            (NoiseModel::Gaussian { .. }, SaddleSample::Noise(z)) => {
                let d1 = self.d1();
                quad(&self.a, &self.b, &self.c) + linalg::dot(&z[..d1], &p.x) + linalg::dot(&z[d1..], &p.y)
            }
            (NoiseModel::FiniteSum { components }, SaddleSample::Index(i)) => {
                let comp = &components[*i];
                quad(&comp.a, &comp.b, &comp.c)
            }
            _ => panic!("sample kind does not match the noise model"),
        }
    }

    fn closed_form_guard(&self) -> Result<()> {
        if self.opaque {
            Err(Error::Capability("closed forms hidden on an opaque instance"))
        } else {
            Ok(())
        }
    }
}

/// `‖[[A, B], [Bᵀ, −μI]]‖₂`
pub fn block_hessian_norm(a: &Matrix, b: &Matrix, mu: f64) -> f64 {
    linalg::sym_spectral_norm(&block_hessian(a, b, mu))
}

pub fn block_hessian(a: &Matrix, b: &Matrix, mu: f64) -> nalgebra::DMatrix<f64> {
    let (d1, d2) = (a.rows, b.cols);
    let mut h = nalgebra::DMatrix::zeros(d1 + d2, d1 + d2);
    for i in 0..d1 {
        for j in 0..d1 {
            h[(i, j)] = a.get(i, j);
        }
        for j in 0..d2 {
            h[(i, d1 + j)] = b.get(i, j);
            h[(d1 + j, i)] = b.get(i, j);
        }
    }
    for j in 0..d2 {
        h[(d1 + j, d1 + j)] = -mu;
    }
    h
}

/// `sqrt(λ_max((1/n) Σ H_i²))`, the average-Lipschitz constant of a finite sum.
pub fn mean_square_hessian_norm(components: &[SaddleComponent], mu: f64) -> f64 {
    let mut acc: Option<nalgebra::DMatrix<f64>> = None;
    for comp in components {
        let h = block_hessian(&comp.a, &comp.b, mu);
        let sq = &h * &h;
        acc = Some(match acc {
            Some(a) => a + sq,
            None => sq,
        });
    }
    let mean = acc.expect("nonempty components") / components.len() as f64;
    linalg::sym_spectral_norm(&mean).sqrt()
}

impl MinimaxOracle for QuadraticSaddle {
    type Sample = SaddleSample;

    fn dims(&self) -> (usize, usize) {
        (self.d1(), self.d2())
    }

    fn profile(&self) -> SmoothnessProfile {
        self.profile
    }

    fn capabilities(&self) -> Capabilities {
        let closed = !self.opaque;
        Capabilities {
            has_exact_grad: closed,
            has_y_star: closed,
            has_phi: closed,
            is_finite_sum: matches!(self.noise, NoiseModel::FiniteSum { .. }),
        }
    }

    fn num_components(&self) -> Option<usize> {
        match &self.noise {
            NoiseModel::FiniteSum { components } => Some(components.len()),
            NoiseModel::Gaussian { .. } => None,
        }
    }

    fn draw(&self, rng: &mut RngStream) -> SaddleSample {
        match &self.noise {
            NoiseModel::Gaussian { sigma_g } => SaddleSample::Noise(rng.normal_vec(self.d1() + self.d2(), *sigma_g)),
            NoiseModel::FiniteSum { components } => SaddleSample::Index(rng.index(components.len())),
        }
    }

    fn sample_grad(&self, p: &Iterate, xi: &SaddleSample) -> GradPair {
        match (&self.noise, xi) {
            (NoiseModel::Gaussian { .. }, SaddleSample::Noise(z)) => {
                let mut g = Self::analytic_grad(&self.a, &self.b, &self.c, self.mu, p);
                let d1 = self.d1();
                linalg::axpy_in_place(1.0, &z[..d1], &mut g.gx);
                linalg::axpy_in_place(1.0, &z[d1..], &mut g.gy);
                g
            }
            (NoiseModel::FiniteSum { components }, SaddleSample::Index(i)) => {
                let comp = &components[*i];
                Self::analytic_grad(&comp.a, &comp.b, &comp.c, self.mu, p)
            }
            _ => panic!("sample kind does not match the noise model"),
        }
    }

    fn index_sample(&self, i: usize) -> Result<SaddleSample> {
        match &self.noise {
            NoiseModel::FiniteSum { components } if i < components.len() => Ok(SaddleSample::Index(i)),
            NoiseModel::FiniteSum { components } => Err(Error::Input(format!(
                "component index {i} out of range for n = {}",
                components.len()
            ))),
            NoiseModel::Gaussian { .. } => Err(Error::Capability("component indexing requires a finite-sum oracle")),
        }
    }

    fn exact_grad(&self, p: &Iterate) -> Result<GradPair> {
        self.closed_form_guard()?;
        match &self.noise {
            // Same summation path as `full_grad`, so restarts from full
            // gradients show zero estimator error bit for bit.
            NoiseModel::FiniteSum { .. } => finite_sum_average(self, p),
            NoiseModel::Gaussian { .. } => Ok(Self::analytic_grad(&self.a, &self.b, &self.c, self.mu, p)),
        }
    }

    fn value(&self, p: &Iterate) -> Result<f64> {
        self.closed_form_guard()?;
        Ok(0.5 * linalg::dot(&p.x, &self.a.mul_vec(&p.x)) + linalg::dot(&p.x, &self.b.mul_vec(&p.y))
            - 0.5 * self.mu * linalg::norm_sq(&p.y)
            + linalg::dot(&self.c, &p.y))
    }

    fn y_star(&self, x: &[f64]) -> Result<Vec2> {
        self.closed_form_guard()?;
        Ok(linalg::scale(1.0 / self.mu, &linalg::add(&self.b.mul_t_vec(x), &self.c)))
    }

    fn phi_value(&self, x: &[f64]) -> Result<f64> {
        self.closed_form_guard()?;
        Ok(self.phi_closed(x))
    }

    fn phi_grad(&self, x: &[f64]) -> Result<Vec1> {
        let ys = self.y_star(x)?;
        Ok(linalg::add(&self.a.mul_vec(x), &self.b.mul_vec(&ys)))
    }

    fn phi_min(&self) -> Option<f64> {
        if self.opaque {
            None
        } else {
            self.phi_star
        }
    }

    fn paired_batch_diff(
        &self,
        new: &Iterate,
        old: &Iterate,
        batch: usize,
        rng: &mut RngStream,
        evals: &mut EvalCounter,
    ) -> GradPair {
        assert!(batch >= 1, "batch size must be at least 1");
        let dp = Iterate::new(linalg::sub(&new.x, &old.x), linalg::sub(&new.y, &old.y));
        evals.add_paired(batch as u64);
        match &self.noise {
            // Additive noise cancels exactly under common random numbers.
            NoiseModel::Gaussian { .. } => Self::analytic_grad(&self.a, &self.b, &vec![0.0; self.d2()], self.mu, &dp),
            // Each component is affine, so the batch mean of differences is the
            // multiplicity-weighted sum of component Hessians applied to dp.
            NoiseModel::FiniteSum { components } => {
                let mut counts = vec![0u32; components.len()];
                for _ in 0..batch {
                    counts[rng.index(components.len())] += 1;
                }
                let zero_c = vec![0.0; self.d2()];
                let mut acc = GradPair::zeros(self.d1(), self.d2());
                for (comp, &k) in components.iter().zip(&counts) {
                    if k > 0 {
                        acc.add_scaled(k as f64, &Self::analytic_grad(&comp.a, &comp.b, &zero_c, self.mu, &dp));
                    }
                }
                acc.scale(1.0 / batch as f64);
                acc
            }
        }
    }
}

fn random_orthogonal(d: usize, rng: &mut RngStream) -> nalgebra::DMatrix<f64> {
    let g = nalgebra::DMatrix::from_fn(d, d, |_, _| rng.normal());
    nalgebra::linalg::QR::new(g).q()
}

fn spectral_norm_rect(m: &Matrix) -> f64 {
    let n = m.to_nalgebra();
    linalg::sym_spectral_norm(&(&n * n.transpose())).sqrt()
}

fn symmetric_noise(d: usize, rng: &mut RngStream) -> Matrix {
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = rng.normal() / (d as f64).sqrt();
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

/// Draws a random instance with declared condition number `kappa_target`.
///
/// The primal Hessian `A + BBᵀ/μ` is positive definite, so `Φ` is bounded below
/// and `Φ*` is exact, while `A` itself is indefinite once the coupling is
/// strong. After scaling, the declared `ℓ` is 1 and `μ = 1/κ`.
pub fn make_quadratic_saddle(d1: usize, d2: usize, kappa_target: f64, seed: u64, noise: NoiseSpec) -> Result<QuadraticSaddle> {
    if !(kappa_target >= 1.0) || !kappa_target.is_finite() {
        return Err(Error::Input(format!("kappa_target must be >= 1, got {kappa_target}")));
    }
    if d1 == 0 || d2 == 0 {
        return Err(Error::Input("dimensions must be positive".into()));
    }
    let mut rng = RngStream::new(seed, 0xB10C);

    let q = random_orthogonal(d1, &mut rng);
    let eig: Vec<f64> = (0..d1).map(|_| 0.5 + 0.5 * rng.uniform()).collect();
    let d0 = Matrix::from_nalgebra(&(&q * nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig)) * q.transpose()));
    let b0 = Matrix::from_row_major(d1, d2, rng.normal_vec(d1 * d2, 1.0));
    let b0 = b0.scaled(1.0 / spectral_norm_rect(&b0));
    let c0 = rng.normal_vec(d2, 1.0);
    let c0 = linalg::scale(1.0 / linalg::norm(&c0), &c0);
    let bbt = b0.matmul(&b0.transpose());

    // Centered component perturbations, drawn once and scaled with the mean.
    let perturb: Option<Vec<(Matrix, Matrix, Vec2)>> = match noise {
        NoiseSpec::FiniteSum { n, spread } => {
            if n == 0 {
                return Err(Error::Input("finite sum needs n >= 1".into()));
            }
            let mut raw: Vec<(Matrix, Matrix, Vec2)> = (0..n)
                .map(|_| {
                    let e = symmetric_noise(d1, &mut rng);
                    let f = Matrix::from_row_major(d1, d2, rng.normal_vec(d1 * d2, 1.0 / (d2 as f64).sqrt()));
                    let g = rng.normal_vec(d2, 1.0 / (d2 as f64).sqrt());
                    (e, f, g)
                })
                .collect();
            let nf = n as f64;
            let mean_e = raw.iter().fold(Matrix::zeros(d1, d1), |acc, r| acc.plus(&r.0)).scaled(1.0 / nf);
            let mean_f = raw.iter().fold(Matrix::zeros(d1, d2), |acc, r| acc.plus(&r.1)).scaled(1.0 / nf);
            let mut mean_g = vec![0.0; d2];
            raw.iter().for_each(|r| linalg::axpy_in_place(1.0 / nf, &r.2, &mut mean_g));
            for r in raw.iter_mut() {
                r.0 = r.0.plus(&mean_e.scaled(-1.0)).scaled(spread);
                r.1 = r.1.plus(&mean_f.scaled(-1.0)).scaled(spread);
                r.2 = linalg::scale(spread, &linalg::sub(&r.2, &mean_g));
            }
            Some(raw)
        }
        NoiseSpec::Gaussian { .. } => None,
    };

    let build = |s: f64| -> (Matrix, Matrix, Vec2, Option<Vec<SaddleComponent>>) {
        let a = d0.scaled(s).plus(&bbt.scaled(-s * s));
        let b = b0.scaled(s);
        let c = linalg::scale(s, &c0);
        let comps = perturb.as_ref().map(|list| {
            list.iter()
                .map(|(e, f, g)| SaddleComponent {
                    a: a.plus(&e.scaled(s)),
                    b: b.plus(&f.scaled(s)),
                    c: linalg::axpy(s, g, &c),
                })
                .collect()
        });
        (a, b, c, comps)
    };
    let lipschitz = |s: f64| -> f64 {
        let (a, b, _, comps) = build(s);
        match comps {
            Some(list) => mean_square_hessian_norm(&list, 1.0),
            None => block_hessian_norm(&a, &b, 1.0),
        }
    };

    // ℓ(0) = 1 and ℓ(s) → ∞, so bisection finds ℓ(s) = κ.
    let s = if kappa_target == 1.0 {
        0.0
    } else {
        let mut hi = 1.0;
        while lipschitz(hi) < kappa_target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if lipschitz(mid) < kappa_target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let ell = lipschitz(s);
    let inv = 1.0 / ell;
    let (a, b, c, comps) = build(s);
    let mu = inv;
    let mut out = match comps {
        Some(list) => {
            let list = list
                .into_iter()
                .map(|comp| SaddleComponent { a: comp.a.scaled(inv), b: comp.b.scaled(inv), c: linalg::scale(inv, &comp.c) })
                .collect();
            QuadraticSaddle::from_components(list, mu, None)?
        }
        None => {
            let sigma = match noise {
                NoiseSpec::Gaussian { sigma } => sigma,
                NoiseSpec::FiniteSum { .. } => unreachable!(),
            };
            let sigma_g = sigma / ((d1 + d2) as f64).sqrt();
            QuadraticSaddle::new(a.scaled(inv), b.scaled(inv), linalg::scale(inv, &c), mu, NoiseModel::Gaussian { sigma_g }, None)?
        }
    };
    out.seed = Some(seed);
    Ok(out)
}
