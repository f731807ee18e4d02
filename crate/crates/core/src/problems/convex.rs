//! Strongly convex quadratics `h(w) = ½ wᵀHw − gᵀw` for exercising the
//! initializers in isolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::oracle::{ConvexOracle, EvalCounter, SmoothnessProfile};
use crate::rng::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexComponent {
    pub h: Matrix,
    pub g: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ConvexNoise {
    Gaussian { sigma_g: f64 },
    FiniteSum { components: Vec<ConvexComponent> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConvexSample {
    Noise(Vec<f64>),
    Index(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexQuadratic {
    pub h: Matrix,
    pub g: Vec<f64>,
    pub noise: ConvexNoise,
    pub profile: SmoothnessProfile,
    pub w_star: Vec<f64>,
}

impl ConvexQuadratic {
    /// Random instance with Hessian eigenvalues spread evenly over
    /// `[1/κ, 1]`. Finite-sum components are perturbed by at most `μ/2` in
    /// spectral norm so each stays convex.
    pub fn random(dim: usize, kappa: f64, seed: u64, sigma: f64, n: Option<usize>) -> Result<Self> {
        if dim == 0 || !(kappa >= 1.0) {
            return Err(Error::Input(format!("need dim >= 1 and kappa >= 1 (dim={dim}, kappa={kappa})")));
        }
        let mut rng = RngStream::new(seed, 0xC0417E);
        let mu = 1.0 / kappa;
        let eig: Vec<f64> = (0..dim)
            .map(|i| if dim == 1 { 1.0 } else { mu + (1.0 - mu) * i as f64 / (dim - 1) as f64 })
            .collect();
        let q = nalgebra::linalg::QR::new(nalgebra::DMatrix::from_fn(dim, dim, |_, _| rng.normal())).q();
        let hm = &q * nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig)) * q.transpose();
        let h = Matrix::from_nalgebra(&(0.5 * (&hm + hm.transpose())));
        let g = rng.normal_vec(dim, 1.0);

        let noise = match n {
            None => ConvexNoise::Gaussian { sigma_g: sigma / (dim as f64).sqrt() },
            Some(n) => {
                if n == 0 {
                    return Err(Error::Input("finite sum needs n >= 1".into()));
                }
                let mut pert: Vec<(nalgebra::DMatrix<f64>, Vec<f64>)> = (0..n)
                    .map(|_| {
                        let r = nalgebra::DMatrix::from_fn(dim, dim, |_, _| rng.normal());
                        let e = 0.5 * (&r + r.transpose());
                        let e = &e * (0.5 * mu / linalg::sym_spectral_norm(&e).max(1e-300));
                        (e, rng.normal_vec(dim, sigma / (dim as f64).sqrt()))
                    })
                    .collect();
                let mean_e = pert.iter().fold(nalgebra::DMatrix::zeros(dim, dim), |acc, p| acc + &p.0) / n as f64;
                let mut mean_g = vec![0.0; dim];
                pert.iter().for_each(|p| linalg::axpy_in_place(1.0 / n as f64, &p.1, &mut mean_g));
                for p in pert.iter_mut() {
                    p.0 -= &mean_e;
                    p.1 = linalg::sub(&p.1, &mean_g);
                }
                // Centering can enlarge a perturbation; rescale to keep ‖E_i‖ ≤ μ/2.
                let worst = pert.iter().map(|p| linalg::sym_spectral_norm(&p.0)).fold(0.0, f64::max);
                let shrink = if worst > 0.5 * mu { 0.5 * mu / worst } else { 1.0 };
                let components = pert
                    .into_iter()
                    .map(|(e, gi)| ConvexComponent {
                        h: Matrix::from_nalgebra(&(&hm + e * shrink)),
                        g: linalg::add(&g, &gi),
                    })
                    .collect();
                ConvexNoise::FiniteSum { components }
            }
        };
        Self::new(h, g, noise)
    }

    pub fn new(h: Matrix, g: Vec<f64>, noise: ConvexNoise) -> Result<Self> {
        let hn = h.to_nalgebra();
        let (lo, hi) = linalg::sym_eig_range(&hn);
        if !(lo > 0.0) {
            return Err(Error::Input("Hessian must be positive definite".into()));
        }
        let (ell, sigma) = match &noise {
            ConvexNoise::Gaussian { sigma_g } => (hi, sigma_g * (g.len() as f64).sqrt()),
            ConvexNoise::FiniteSum { components } => {
                let n = components.len() as f64;
                let msq = components.iter().fold(nalgebra::DMatrix::zeros(g.len(), g.len()), |acc, c| {
                    let m = c.h.to_nalgebra();
                    acc + &m * &m
                }) / n;
                (linalg::sym_spectral_norm(&msq).sqrt(), 0.0)
            }
        };
        let w_star: Vec<f64> = hn
            .cholesky()
            .expect("positive definite")
            .solve(&nalgebra::DVector::from_vec(g.clone()))
            .iter()
            .copied()
            .collect();
        let mut out = Self { h, g, noise, profile: SmoothnessProfile::new(ell, lo, sigma)?, w_star };
        if let ConvexNoise::FiniteSum { components } = &out.noise {
            // Component gradient spread at the optimum.
            let ws = &out.w_star;
            let var = components
                .iter()
                .map(|c| linalg::norm_sq(&linalg::sub(&c.h.mul_vec(ws), &c.g)))
                .sum::<f64>()
                / components.len() as f64;
            out.profile.sigma = var.sqrt();
        }
        Ok(out)
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        0.5 * linalg::dot(w, &self.h.mul_vec(w)) - linalg::dot(&self.g, w)
    }
}

impl ConvexOracle for ConvexQuadratic {
    type Sample = ConvexSample;

    fn dim(&self) -> usize {
        self.g.len()
    }

    fn profile(&self) -> SmoothnessProfile {
        self.profile
    }

    fn num_components(&self) -> Option<usize> {
        match &self.noise {
            ConvexNoise::FiniteSum { components } => Some(components.len()),
            ConvexNoise::Gaussian { .. } => None,
        }
    }

    fn draw(&self, rng: &mut RngStream) -> ConvexSample {
        match &self.noise {
            ConvexNoise::Gaussian { sigma_g } => ConvexSample::Noise(rng.normal_vec(self.dim(), *sigma_g)),
            ConvexNoise::FiniteSum { components } => ConvexSample::Index(rng.index(components.len())),
        }
    }

    fn sample_grad(&self, w: &[f64], xi: &ConvexSample) -> Vec<f64> {
        match (&self.noise, xi) {
            (ConvexNoise::Gaussian { .. }, ConvexSample::Noise(z)) => {
                let mut out = linalg::sub(&self.h.mul_vec(w), &self.g);
                linalg::axpy_in_place(1.0, z, &mut out);
                out
            }
            (ConvexNoise::FiniteSum { components }, ConvexSample::Index(i)) => {
                let c = &components[*i];
                linalg::sub(&c.h.mul_vec(w), &c.g)
            }
            _ => panic!("sample kind does not match the noise model"),
        }
    }

    fn index_sample(&self, i: usize) -> Result<ConvexSample> {
        match &self.noise {
            ConvexNoise::FiniteSum { components } if i < components.len() => Ok(ConvexSample::Index(i)),
            ConvexNoise::FiniteSum { .. } => Err(Error::Input(format!("component index {i} out of range"))),
            ConvexNoise::Gaussian { .. } => Err(Error::Capability("component indexing requires a finite-sum oracle")),
        }
    }

    fn exact_grad(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(linalg::sub(&self.h.mul_vec(w), &self.g))
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(self.w_star.clone())
    }

    fn paired_batch_diff(
        &self,
        new: &[f64],
        old: &[f64],
        batch: usize,
        rng: &mut RngStream,
        evals: &mut EvalCounter,
    ) -> Vec<f64> {
        let dw = linalg::sub(new, old);
        evals.add_paired(batch as u64);
        match &self.noise {
            ConvexNoise::Gaussian { .. } => self.h.mul_vec(&dw),
            ConvexNoise::FiniteSum { components } => {
                let mut acc = vec![0.0; self.dim()];
                for _ in 0..batch {
                    let i = rng.index(components.len());
                    linalg::axpy_in_place(1.0, &components[i].h.mul_vec(&dw), &mut acc);
                }
                linalg::scale(1.0 / batch as f64, &acc)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_average_to_mean() {
        let p = ConvexQuadratic::random(5, 4.0, 3, 0.5, Some(50)).unwrap();
        let w = vec![0.3, -0.1, 0.7, 0.0, 1.2];
        let mut ev = EvalCounter::new();
        let full = p.full_grad(&w, &mut ev).unwrap();
        let exact = p.exact_grad(&w).unwrap();
        for (a, b) in full.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(ev.count(), 50);
    }

    #[test]
    fn declared_kappa_near_target() {
        let p = ConvexQuadratic::random(5, 4.0, 3, 0.5, None).unwrap();
        assert!((p.profile.kappa - 4.0).abs() < 1e-9);
        let f = ConvexQuadratic::random(5, 4.0, 3, 0.5, Some(50)).unwrap();
        assert!(f.profile.kappa >= 4.0 && f.profile.kappa < 4.5, "{}", f.profile.kappa);
    }

    #[test]
    fn minimizer_has_zero_gradient() {
        let p = ConvexQuadratic::random(6, 8.0, 1, 0.0, None).unwrap();
        let g = p.exact_grad(&p.w_star).unwrap();
        assert!(linalg::norm(&g) < 1e-10);
    }
}
