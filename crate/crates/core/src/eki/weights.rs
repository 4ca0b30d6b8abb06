use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::StaticModel;
use crate::stats::{normalize_log_weights, Ensemble, WeightVector};
use crate::tempersmc::{adapt_alpha, ALPHA_TOLERANCE, MAX_BISECTIONS};

/// Incremental weight used to pick the next temperature step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    /// `log w_n = h · log N(y | g_n, Γ_n)`, the ratio of successive tempered targets.
    #[default]
    ExactTempered,
    /// `log w_n = −½ log det Γ_n − ½ h (y − g_n)ᵀ Γ_n⁻¹ (y − g_n)`: the log-det
    /// term enters without the factor h.
    Displayed,
}

/// Per-particle pieces of the Gaussian log-likelihood at the current
/// `(θ, G(θ), φ)`; computed once per iteration.
#[derive(Debug, Clone)]
pub struct LikelihoodTerms {
    pub log_det: Vec<f64>,
    pub quad: Vec<f64>,
    dim_y: usize,
}

impl LikelihoodTerms {
    pub fn compute(model: &StaticModel, theta: &Ensemble, g: &Ensemble, phi: &Ensemble) -> Self {
        let n = theta.size();
        let (log_det, quad): (Vec<f64>, Vec<f64>) = (0..n)
            .into_par_iter()
            .map(|i| {
                let t = theta.column(i);
                let gi = g.column(i);
                let p = phi.column(i);
                match model.gamma(&t, &gi, &p).factor() {
                    Ok(f) => (f.log_det(), f.quad_form(&(&model.data - &gi))),
                    Err(_) => (f64::NAN, f64::INFINITY),
                }
            })
            .unzip();
        Self {
            log_det,
            quad,
            dim_y: model.dim_y(),
        }
    }

    pub fn len(&self) -> usize {
        self.quad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quad.is_empty()
    }

    pub fn loglik(&self, n: usize) -> f64 {
        let v = -0.5 * (self.dim_y as f64 * (2.0 * PI).ln() + self.log_det[n] + self.quad[n]);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    pub fn logliks(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.loglik(n)).collect()
    }

    pub fn log_weights(&self, h: f64, rule: WeightRule) -> Vec<f64> {
        (0..self.len())
            .map(|n| {
                let v = match rule {
                    WeightRule::ExactTempered => h * self.loglik(n),
                    WeightRule::Displayed => -0.5 * self.log_det[n] - 0.5 * h * self.quad[n],
                };
                if v.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            })
            .collect()
    }
}

/// Normalized incremental weights for a step of size `h`.
pub fn cw_increment_weights(terms: &LikelihoodTerms, h: f64, rule: WeightRule) -> Result<WeightVector> {
    normalize_log_weights(&terms.log_weights(h, rule))
}

/// Step `h` such that the weights `∝ exp(h·ℓ_n)` keep `ESS ≥ target_ess`;
/// returns `1 − α_cum` when the remaining step is affordable.
pub fn adapt_h(logw_unit: &[f64], alpha_cum: f64, target_ess: f64) -> Result<f64> {
    let alpha = adapt_alpha(logw_unit, alpha_cum, target_ess)?;
    Ok(if alpha >= 1.0 { 1.0 - alpha_cum } else { alpha - alpha_cum })
}

/// Step size under the chosen weight rule.
///
/// With [`WeightRule::Displayed`] the weights do not become uniform as h → 0
/// (the log-det term remains), so the target can be unattainable; that is
/// reported as [`Error::TargetUnreachable`].
pub fn adapt_step(terms: &LikelihoodTerms, alpha_cum: f64, target_ess: f64, rule: WeightRule) -> Result<f64> {
    match rule {
        WeightRule::ExactTempered => adapt_h(&terms.logliks(), alpha_cum, target_ess),
        WeightRule::Displayed => {
            let ess = |h: f64| {
                normalize_log_weights(&terms.log_weights(h, rule))
                    .map(|w| w.ess())
                    .unwrap_or(0.0)
            };
            let h_max = 1.0 - alpha_cum;
            if ess(h_max) >= target_ess {
                return Ok(h_max);
            }
            if ess(0.0) < target_ess {
                return Err(Error::TargetUnreachable { target: target_ess });
            }
            let (mut lo, mut hi) = (0.0, h_max);
            for _ in 0..MAX_BISECTIONS {
                if hi - lo <= ALPHA_TOLERANCE {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if ess(mid) >= target_ess {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(if lo > 0.0 { lo } else { hi })
        }
    }
}
