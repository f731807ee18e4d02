//! Parameter sets for SREDA (stochastic and finite-sum) and the baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::SmoothnessProfile;

/// `7368/175`, the inner-batch constant.
pub const S2_CONSTANT: f64 = 7368.0 / 175.0;
/// `1073/108`, the certified stationarity multiple of `ε`.
pub const BOUND_CONSTANT: f64 = 1073.0 / 108.0;

/// How the estimator is re-anchored every `q` outer steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartMode {
    Batch,
    FullGradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SredaParams {
    pub epsilon: f64,
    pub zeta: f64,
    pub lambda: f64,
    pub q: u64,
    /// Restart batch; for full-gradient restarts this records `n`.
    pub s1: u64,
    pub s2: u64,
    pub k: u64,
    pub m: u64,
    pub eta_num: f64,
    pub eta_cap: f64,
    pub restart: RestartMode,
    /// `(1073/108)·ε`
    pub bound: f64,
}

impl SredaParams {
    /// Upper bound on any single outer displacement `‖x_{k+1} − x_k‖`.
    pub fn step_bound(&self) -> f64 {
        self.eta_num
    }
}

/// Ceiling that ignores floating-point fuzz just above an integer.
fn snapped_ceil(v: f64, what: &str) -> Result<u64> {
    if !v.is_finite() || v >= 9.2e18 {
        return Err(Error::Parameter(format!("{what} = {v:e} overflows; use a larger epsilon")));
    }
    let r = v.round();
    let c = if (v - r).abs() <= 1e-9 * r.abs().max(1.0) { r } else { v.ceil() };
    Ok((c as u64).max(1))
}

fn check_inputs(epsilon: f64, delta_f: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Input(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta_f > 0.0) || !delta_f.is_finite() {
        return Err(Error::Input(format!("delta_f must be positive, got {delta_f}")));
    }
    Ok(())
}

/// Stochastic-case parameters. Every ceiling is applied to the whole
/// expression and any count below one is raised to one.
pub fn derive_params(epsilon: f64, profile: &SmoothnessProfile, delta_f: f64) -> Result<SredaParams> {
    check_inputs(epsilon, delta_f)?;
    let SmoothnessProfile { ell, sigma, kappa, .. } = *profile;
    let q = snapped_ceil(1.0 / epsilon, "q")?;
    Ok(SredaParams {
        epsilon,
        zeta: (epsilon / kappa).powi(2),
        lambda: 2.0 / (7.0 * ell),
        q,
        s1: snapped_ceil(24.0 * (sigma * kappa / epsilon).powi(2), "S1")?,
        s2: snapped_ceil(S2_CONSTANT * kappa * q as f64, "S2")?,
        k: snapped_ceil(100.0 * kappa * ell * delta_f / (9.0 * epsilon * epsilon), "K")?,
        m: snapped_ceil(28.0 * kappa - 1.0, "m")?,
        eta_num: epsilon / (5.0 * kappa * ell),
        eta_cap: 1.0 / (10.0 * kappa * ell),
        restart: RestartMode::Batch,
        bound: BOUND_CONSTANT * epsilon,
    })
}

/// Finite-sum parameters. For `n ≥ κ²` the period is `⌈√n/κ⌉`; otherwise the
/// estimator restarts from the full gradient at every step.
pub fn derive_params_finite(epsilon: f64, profile: &SmoothnessProfile, delta_f: f64, n: usize) -> Result<SredaParams> {
    if n == 0 {
        return Err(Error::Input("n must be at least 1".into()));
    }
    let mut p = derive_params(epsilon, profile, delta_f)?;
    let kappa = profile.kappa;
    let nf = n as f64;
    if nf >= kappa * kappa * (1.0 - 1e-12) {
        p.q = snapped_ceil(nf.sqrt() / kappa, "q")?;
        p.s2 = snapped_ceil(S2_CONSTANT * kappa * p.q as f64, "S2")?;
    } else {
        p.q = 1;
        p.s2 = 1;
    }
    p.s1 = n as u64;
    p.restart = RestartMode::FullGradient;
    Ok(p)
}

/// Normalized step `min(ε/(5κℓ‖v‖), 1/(10κℓ))`; a zero direction takes the cap.
pub fn step_size(params: &SredaParams, v_norm: f64) -> f64 {
    if v_norm > 0.0 {
        (params.eta_num / v_norm).min(params.eta_cap)
    } else {
        params.eta_cap
    }
}

/// Predicted oracle calls of a full-length run, initializer excluded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedEvals {
    pub restarts: u64,
    pub restart_evals: u64,
    /// Concave-maximizer calls charged `S₂` per correction.
    pub inner_paper: u64,
    /// Concave-maximizer calls charged `2·S₂` per correction.
    pub inner_physical: u64,
    pub total_paper: u64,
    pub total_physical: u64,
}

pub fn predicted_evals(p: &SredaParams) -> PredictedEvals {
    let restarts = p.k.div_ceil(p.q);
    let restart_evals = restarts.saturating_mul(p.s1);
    let inner_paper = p.k.saturating_mul(p.s2).saturating_mul(p.m + 2);
    let inner_physical = inner_paper.saturating_mul(2);
    PredictedEvals {
        restarts,
        restart_evals,
        inner_paper,
        inner_physical,
        total_paper: restart_evals.saturating_add(inner_paper),
        total_physical: restart_evals.saturating_add(inner_physical),
    }
}

/// Step sizes and budgets of SGDA / SGDmax.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub eta: f64,
    pub lam: f64,
    pub batch: u64,
    pub k: u64,
    /// Max-oracle accuracy (SGDmax only).
    pub zeta: f64,
    /// Inner ascent steps per outer step (SGDmax only).
    pub inner_budget: u64,
}

/// Default cap on SGDmax inner ascent steps.
pub const SGDMAX_INNER_CAP: u64 = 10_000;

impl BaselineParams {
    /// `η = 1/(κ²ℓ)`, `λ = 1/ℓ`, `S = ⌈κ/ε²⌉`, `K = ⌈κ²/ε²⌉`.
    pub fn sgda(epsilon: f64, profile: &SmoothnessProfile) -> Result<Self> {
        check_inputs(epsilon, 1.0)?;
        let SmoothnessProfile { ell, kappa, .. } = *profile;
        Ok(Self {
            eta: 1.0 / (kappa * kappa * ell),
            lam: 1.0 / ell,
            batch: snapped_ceil(kappa / (epsilon * epsilon), "S")?,
            k: snapped_ceil((kappa / epsilon).powi(2), "K")?,
            zeta: (epsilon / kappa).powi(2),
            inner_budget: 0,
        })
    }

    /// `η = 1/(κℓ)`, SGA step `1/ℓ`, `S = ⌈κ/ε²⌉`, `K = ⌈κ/ε²⌉`, inner budget
    /// `⌈κ²/ε²⌉` capped at `inner_cap`.
    pub fn sgdmax(epsilon: f64, profile: &SmoothnessProfile, inner_cap: u64) -> Result<Self> {
        check_inputs(epsilon, 1.0)?;
        let SmoothnessProfile { ell, kappa, .. } = *profile;
        Ok(Self {
            eta: 1.0 / (kappa * ell),
            lam: 1.0 / ell,
            batch: snapped_ceil(kappa / (epsilon * epsilon), "S")?,
            k: snapped_ceil(kappa / (epsilon * epsilon), "K")?,
            zeta: (epsilon / kappa).powi(2),
            inner_budget: snapped_ceil((kappa / epsilon).powi(2), "inner budget")?.min(inner_cap),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(ell: f64, mu: f64, sigma: f64) -> SmoothnessProfile {
        SmoothnessProfile::new(ell, mu, sigma).unwrap()
    }

    #[test]
    fn stochastic_reference_values() {
        let p = derive_params(0.1, &prof(1.0, 0.1, 1.0), 1.0).unwrap();
        assert!((p.zeta - 1e-4).abs() < 1e-15);
        assert!((p.lambda - 2.0 / 7.0).abs() < 1e-15);
        assert_eq!(p.q, 10);
        assert_eq!(p.s1, 240_000);
        assert_eq!(p.s2, 4211);
        assert_eq!(p.m, 279);
        assert_eq!(p.k, 11_112);
        assert!((p.eta_num - 0.002).abs() < 1e-15);
        assert!((p.eta_cap - 0.01).abs() < 1e-15);
        assert!((p.bound - 1073.0 / 1080.0).abs() < 1e-15);
    }

    #[test]
    fn kappa_one_values() {
        let p = derive_params(0.5, &prof(2.0, 2.0, 1.0), 1.0).unwrap();
        assert_eq!(p.m, 27);
        assert!((p.lambda - 1.0 / 7.0).abs() < 1e-15);
        assert!((p.eta_cap - 1.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn noiseless_restart_batch_is_one() {
        let p = derive_params(0.1, &prof(1.0, 0.5, 0.0), 1.0).unwrap();
        assert_eq!(p.s1, 1);
        let big = derive_params(3.0, &prof(1.0, 1.0, 0.0), 1.0).unwrap();
        assert_eq!(big.q, 1);
    }

    #[test]
    fn finite_sum_regimes() {
        let pr = prof(1.0, 0.1, 1.0);
        let big = derive_params_finite(0.1, &pr, 1.0, 10_000).unwrap();
        assert_eq!((big.q, big.s2, big.restart), (10, 4211, RestartMode::FullGradient));
        let small = derive_params_finite(0.1, &pr, 1.0, 50).unwrap();
        assert_eq!((small.q, small.s2), (1, 1));
        let tie = derive_params_finite(0.1, &pr, 1.0, 100).unwrap();
        assert_eq!((tie.q, tie.s2), (1, 422));
        for p in [&big, &small, &tie] {
            assert_eq!((p.m, p.k), (279, 11_112));
        }
    }

    #[test]
    fn step_size_cases() {
        let p = derive_params(0.1, &prof(1.0, 0.1, 1.0), 1.0).unwrap();
        assert!((step_size(&p, 1.0) - 0.002).abs() < 1e-15);
        assert!((step_size(&p, 0.1) - 0.01).abs() < 1e-15);
        assert!((step_size(&p, 0.0) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn overflow_is_parameter_error() {
        let e = derive_params(1e-9, &prof(1.0, 1e-3, 10.0), 1.0).unwrap_err();
        assert!(matches!(e, Error::Parameter(_)));
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(derive_params(0.0, &prof(1.0, 1.0, 1.0), 1.0).is_err());
        assert!(derive_params(0.1, &prof(1.0, 1.0, 1.0), -1.0).is_err());
    }
}
