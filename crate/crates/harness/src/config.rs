//! Experiment configuration (JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sreda_core::params::{BaselineParams, SredaParams, SGDMAX_INNER_CAP};
use sreda_core::problems::NoiseSpec;
use sreda_core::Algorithm;

use crate::error::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Only `quadratic_saddle` is supported.
    pub kind: String,
    pub d1: usize,
    pub d2: usize,
    pub kappa: f64,
    pub noise: NoiseSpec,
    pub seed: u64,
    /// Hide closed forms (turns the instance into a black box).
    #[serde(default)]
    pub opaque: bool,
    /// `Φ(x₀) − Φ*` of the generated start point.
    #[serde(default = "default_gap")]
    pub start_gap: f64,
    /// Explicit start point; overrides `start_gap`.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

fn default_gap() -> f64 {
    1.0
}

/// Per-field parameter overrides. Fields that do not belong to the chosen
/// algorithm are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub zeta: Option<f64>,
    pub lambda: Option<f64>,
    pub q: Option<u64>,
    pub s1: Option<u64>,
    pub s2: Option<u64>,
    pub k: Option<u64>,
    pub m: Option<u64>,
    pub eta_num: Option<f64>,
    pub eta_cap: Option<f64>,
    pub eta: Option<f64>,
    pub lam: Option<f64>,
    pub batch: Option<u64>,
    pub inner_budget: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub algorithm: Algorithm,
    pub epsilon: f64,
    #[serde(default)]
    pub delta_f: Option<f64>,
    #[serde(default)]
    pub overrides: Overrides,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub cap: Option<u64>,
    #[serde(default = "default_true")]
    pub diagnostics: bool,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// SGDmax inner-step cap.
    #[serde(default = "default_inner_cap")]
    pub inner_cap: u64,
}

fn default_true() -> bool {
    true
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_inner_cap() -> u64 {
    SGDMAX_INNER_CAP
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Parse(m));
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty".into());
        }
        if self.problem.kind != "quadratic_saddle" {
            return bad(format!("unknown problem kind '{}'", self.problem.kind));
        }
        if self.problem.d1 == 0 || self.problem.d2 == 0 {
            return bad("problem dimensions must be positive".into());
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if let Some(x0) = &self.problem.x0 {
            if x0.len() != self.problem.d1 {
                return bad(format!("x0 has length {}, expected d1 = {}", x0.len(), self.problem.d1));
            }
        }
        let o = &self.overrides;
        let sreda_only = [
            ("lambda", o.lambda.is_some()),
            ("q", o.q.is_some()),
            ("s1", o.s1.is_some()),
            ("s2", o.s2.is_some()),
            ("m", o.m.is_some()),
            ("eta_num", o.eta_num.is_some()),
            ("eta_cap", o.eta_cap.is_some()),
        ];
        let baseline_only = [
            ("eta", o.eta.is_some()),
            ("lam", o.lam.is_some()),
            ("batch", o.batch.is_some()),
            ("inner_budget", o.inner_budget.is_some()),
        ];
        let is_sreda = matches!(self.algorithm, Algorithm::Sreda | Algorithm::SredaFinite);
        let (foreign, owner) = if is_sreda { (&baseline_only[..], "baselines") } else { (&sreda_only[..], "SREDA") };
        if let Some((name, _)) = foreign.iter().find(|(_, set)| *set) {
            return bad(format!("override '{name}' only applies to {owner}, not {}", self.algorithm));
        }
        if self.algorithm == Algorithm::Sgda {
            if let Some(name) = [("inner_budget", o.inner_budget.is_some()), ("zeta", o.zeta.is_some())].iter().find(|(_, s)| *s).map(|(n, _)| n) {
                return bad(format!("override '{name}' does not apply to sgda"));
            }
        }
        for (name, v) in [("q", o.q), ("s1", o.s1), ("s2", o.s2)] {
            if v == Some(0) {
                return bad(format!("override '{name}' must be at least 1"));
            }
        }
        for (name, v) in [("zeta", o.zeta), ("lambda", o.lambda), ("eta_num", o.eta_num), ("eta_cap", o.eta_cap), ("lam", o.lam)] {
            if v.is_some_and(|v| !(v > 0.0)) {
                return bad(format!("override '{name}' must be positive"));
            }
        }
        if o.eta.is_some_and(|v| v < 0.0) {
            return bad("override 'eta' must be nonnegative".into());
        }
        if self.algorithm == Algorithm::SredaFinite && !matches!(self.problem.noise, NoiseSpec::FiniteSum { .. }) {
            return bad("sreda-finite needs a finite_sum noise model".into());
        }
        Ok(())
    }

    pub fn apply_sreda(&self, p: &mut SredaParams) {
        let o = &self.overrides;
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { p.$f = v; })* };
        }
        set!(zeta, lambda, q, s1, s2, k, m, eta_num, eta_cap);
    }

    pub fn apply_baseline(&self, p: &mut BaselineParams) {
        let o = &self.overrides;
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { p.$f = v; })* };
        }
        set!(eta, lam, batch, k, zeta, inner_budget);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "problem": {"kind": "quadratic_saddle", "d1": 2, "d2": 2, "kappa": 2.0,
                    "noise": {"mode": "gaussian", "sigma": 0.1}, "seed": 1},
        "algorithm": "sreda", "epsilon": 0.5, "seeds": [1, 2]
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        assert!(c.diagnostics);
        assert_eq!(c.problem.start_gap, 1.0);
        assert_eq!(c.out, PathBuf::from("out"));
    }

    #[test]
    fn empty_seeds_rejected() {
        let text = BASE.replace("[1, 2]", "[]");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(HarnessError::Parse(_))));
    }

    #[test]
    fn foreign_override_rejected() {
        let text = BASE.replace(r#""seeds""#, r#""overrides": {"eta": 0.1}, "seeds""#);
        assert!(matches!(ExperimentConfig::from_json(&text), Err(HarnessError::Parse(_))));
    }

    #[test]
    fn unknown_field_rejected() {
        let text = BASE.replace(r#""seeds""#, r#""bogus": 1, "seeds""#);
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn overrides_apply() {
        let text = BASE.replace(r#""seeds""#, r#""overrides": {"q": 3, "k": 7}, "seeds""#);
        let c = ExperimentConfig::from_json(&text).unwrap();
        let prof = sreda_core::SmoothnessProfile::new(1.0, 0.5, 0.1).unwrap();
        let mut p = sreda_core::derive_params(0.5, &prof, 1.0).unwrap();
        c.apply_sreda(&mut p);
        assert_eq!((p.q, p.k), (3, 7));
    }
}
