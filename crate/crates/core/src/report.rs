//! Serializable run summaries shared by the static-model samplers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Smc,
    Ieki,
    CwIeki,
    Enkf,
    Pf,
    Kalman,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Smc => "smc",
            Method::Ieki => "ieki",
            Method::CwIeki => "cw-ieki",
            Method::Enkf => "enkf",
            Method::Pf => "pf",
            Method::Kalman => "kalman",
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self, Method::Smc | Method::Ieki | Method::CwIeki)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-iteration log and cost accounting of a tempering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema_version: u32,
    pub method: Method,
    pub seed: u64,
    pub n: usize,
    pub ess_target: f64,
    pub param_names: Vec<String>,
    /// Cumulative temperature after each iteration; the last entry is 1.
    pub alphas: Vec<f64>,
    /// Temperature increments `h_j = α_j − α_{j−1}`.
    pub increments: Vec<f64>,
    /// ESS of the incremental weights at each accepted temperature.
    pub ess: Vec<f64>,
    /// MCMC sweeps performed per iteration (φ-only for CW-IEKI).
    pub repeats: Vec<usize>,
    pub acceptance: Vec<f64>,
    /// Forward-model calls made during inference, read from the counter.
    pub g_evals: u64,
    /// Forward-model calls excluding the initial likelihood cache.
    pub g_evals_updates: u64,
    /// `N ΣM_j + 1` for SMC, `J N` for the Kalman-inversion methods.
    pub g_evals_textbook: u64,
    /// Calls made while sampling the posterior predictive (not part of inference cost).
    pub predictive_g_evals: u64,
    pub samples_file: Option<String>,
}

impl RunReport {
    pub fn new(method: Method, seed: u64, n: usize, ess_target: f64, param_names: Vec<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            method,
            seed,
            n,
            ess_target,
            param_names,
            alphas: Vec::new(),
            increments: Vec::new(),
            ess: Vec::new(),
            repeats: Vec::new(),
            acceptance: Vec::new(),
            g_evals: 0,
            g_evals_updates: 0,
            g_evals_textbook: 0,
            predictive_g_evals: 0,
            samples_file: None,
        }
    }

    pub fn iterations(&self) -> usize {
        self.alphas.len()
    }
}

/// Final equally weighted samples (one column per particle) and the run log.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub samples: DMatrix<f64>,
    pub report: RunReport,
}
