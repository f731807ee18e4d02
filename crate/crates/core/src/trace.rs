//! Per-iteration records of a solver run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::linalg::{Vec1, Vec2};
use crate::oracle::{EvalCounter, Iterate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Sreda,
    SredaFinite,
    Sgda,
    Sgdmax,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Sreda => "sreda",
            Algorithm::SredaFinite => "sreda-finite",
            Algorithm::Sgda => "sgda",
            Algorithm::Sgdmax => "sgdmax",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sreda" => Ok(Algorithm::Sreda),
            "sreda-finite" => Ok(Algorithm::SredaFinite),
            "sgda" => Ok(Algorithm::Sgda),
            "sgdmax" => Ok(Algorithm::Sgdmax),
            other => Err(format!("unknown algorithm '{other}'")),
        }
    }
}

/// One outer iteration. Optional cells are empty when not applicable or when
/// diagnostics are off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: u64,
    pub eta: Option<f64>,
    pub v_norm: Option<f64>,
    pub u_norm: Option<f64>,
    pub evals_physical: u64,
    pub evals_paper: u64,
    /// Exact `‖∇Φ(x_k)‖`.
    pub phi_grad_norm: Option<f64>,
    /// `‖∇_y f(x_k, y_k)‖²`
    pub delta_k: Option<f64>,
    /// `‖v_k − ∇_x f‖² + ‖u_k − ∇_y f‖²`
    pub big_delta_k: Option<f64>,
}

impl TraceRow {
    pub fn new(k: u64, evals: &EvalCounter) -> Self {
        Self {
            k,
            eta: None,
            v_norm: None,
            u_norm: None,
            evals_physical: evals.physical,
            evals_paper: evals.paper,
            phi_grad_norm: None,
            delta_k: None,
            big_delta_k: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub rows: Vec<TraceRow>,
    /// Output point chosen uniformly among the iterates.
    pub x_hat: Vec1,
    pub x_hat_index: u64,
    pub x_final: Vec1,
    pub y_final: Vec2,
    /// Oracle calls spent before the first outer iteration (initializer).
    pub init_evals: u64,
    /// Oracle calls inside max-oracle loops (SGDmax only).
    pub inner_evals: u64,
    pub evals: EvalCounter,
    /// Outer iterations requested by the parameters.
    pub k_requested: u64,
    /// False when an iteration cap cut the run short.
    pub bound_certified: bool,
    pub warnings: Vec<String>,
    /// Parameter echo.
    pub meta: BTreeMap<String, f64>,
    /// Iterates `(x_k, y_k)`, when recorded.
    pub path: Option<Vec<Iterate>>,
}

impl RunTrace {
    /// Mean of a column over rows where it is present.
    pub fn column_mean(&self, f: impl Fn(&TraceRow) -> Option<f64>) -> Option<f64> {
        let vals: Vec<f64> = self.rows.iter().filter_map(f).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}
