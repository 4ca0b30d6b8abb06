use std::f64::consts::PI;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::likelihood::Covariance;
use super::prior::{Marginal, Prior};
use super::static_model::{ForwardModel, NoiseModel, StaticModel};
use crate::error::{Error, Result};
use crate::stats::log_sum_exp;

/// Constant-mean model `y_i = θ + ε_i`, `ε_i ~ N(0, σ²)`, with σ unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarSigmaSpec {
    pub observations: usize,
    pub theta_true: f64,
    pub sigma_true: f64,
    #[serde(default)]
    pub prior_mean: f64,
    #[serde(default = "default_prior_sd")]
    pub prior_sd: f64,
    #[serde(default = "default_sigma_max")]
    pub sigma_max: f64,
    pub data_seed: u64,
}

fn default_prior_sd() -> f64 {
    2.0
}

fn default_sigma_max() -> f64 {
    5.0
}

impl Default for ScalarSigmaSpec {
    fn default() -> Self {
        Self {
            observations: 20,
            theta_true: 1.0,
            sigma_true: 0.5,
            prior_mean: 0.0,
            prior_sd: default_prior_sd(),
            sigma_max: default_sigma_max(),
            data_seed: 20_230_401,
        }
    }
}

#[derive(Debug)]
pub struct ScalarSigma {
    pub model: StaticModel,
    pub spec: ScalarSigmaSpec,
}

/// Summary of the 2-D tensor-grid posterior.
#[derive(Debug, Clone)]
pub struct QuadraturePosterior {
    pub log_evidence: f64,
    pub theta_mean: f64,
    pub theta_sd: f64,
    pub sigma_mean: f64,
    pub sigma_sd: f64,
}

pub fn make_scalar_sigma_model(spec: &ScalarSigmaSpec) -> Result<ScalarSigma> {
    if spec.observations == 0 {
        return Err(Error::InvalidParameter("observations must be >= 1".into()));
    }
    if !(spec.sigma_true > 0.0) || !(spec.sigma_max > 0.0) || !(spec.prior_sd > 0.0) {
        return Err(Error::InvalidParameter(
            "sigma_true, sigma_max and prior_sd must be positive".into(),
        ));
    }
    let n = spec.observations;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.data_seed);
    let y = DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        spec.theta_true + spec.sigma_true * z
    });
    let forward = ForwardModel::new(1, n, move |theta| DVector::from_element(n, theta[0]));
    let noise = NoiseModel::new(1, false, move |_, _, phi| {
        Covariance::Diagonal(DVector::from_element(n, phi[0] * phi[0]))
    });
    let prior_theta = Prior::independent(vec![Marginal::Normal {
        mean: spec.prior_mean,
        sd: spec.prior_sd,
    }])?;
    let prior_phi = Prior::independent(vec![Marginal::Uniform {
        lower: 0.0,
        upper: spec.sigma_max,
    }])?;
    let model = StaticModel::new(forward, noise, prior_theta, prior_phi, y)?
        .with_names(&["theta"], &["sigma"]);
    Ok(ScalarSigma {
        model,
        spec: spec.clone(),
    })
}

fn simpson_weights(nodes: usize, h: f64) -> Vec<f64> {
    (0..nodes)
        .map(|i| {
            let w = if i == 0 || i == nodes - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

impl ScalarSigma {
    pub fn data(&self) -> &DVector<f64> {
        &self.model.data
    }

    /// Conjugate `θ | σ, y` (mean, variance) for a fixed σ.
    pub fn conditional_theta_posterior(&self, sigma: f64) -> (f64, f64) {
        let n = self.spec.observations as f64;
        let s0 = self.spec.prior_sd;
        let prec = 1.0 / (s0 * s0) + n / (sigma * sigma);
        let var = 1.0 / prec;
        let sum: f64 = self.data().iter().sum();
        (var * (self.spec.prior_mean / (s0 * s0) + sum / (sigma * sigma)), var)
    }

    /// Unnormalized joint log posterior.
    pub fn log_joint(&self, theta: f64, sigma: f64) -> f64 {
        if !(sigma > 0.0) || sigma > self.spec.sigma_max {
            return f64::NEG_INFINITY;
        }
        let n = self.spec.observations as f64;
        let ss: f64 = self.data().iter().map(|y| (y - theta).powi(2)).sum();
        let ll = -0.5 * n * (2.0 * PI).ln() - n * sigma.ln() - 0.5 * ss / (sigma * sigma);
        let z = (theta - self.spec.prior_mean) / self.spec.prior_sd;
        let lp = -0.5 * z * z - 0.5 * (2.0 * PI).ln() - self.spec.prior_sd.ln() - self.spec.sigma_max.ln();
        ll + lp
    }

    /// Integration window `([θ_lo, θ_hi], [0, σ_hi])` holding all but a
    /// negligible fraction of posterior mass.
    pub fn quadrature_window(&self) -> ((f64, f64), (f64, f64)) {
        let n = self.spec.observations;
        let y = self.data();
        let mean = y.iter().sum::<f64>() / n as f64;
        let sigma_hat = if n >= 2 {
            (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            self.spec.sigma_max / 4.0
        };
        // σ-marginal upper tail decays roughly like σ^-(n-1)
        let sigma_hi = if n > 8 {
            let k = 10f64.powf(12.0 / (n as f64 - 2.0)).max(2.0);
            (k * sigma_hat).min(self.spec.sigma_max)
        } else {
            self.spec.sigma_max
        };
        let (m, _) = self.conditional_theta_posterior(sigma_hat.max(1e-12));
        let (_, v_hi) = self.conditional_theta_posterior(sigma_hi);
        let half = 10.0 * v_hi.sqrt();
        ((m - half, m + half), (0.0, sigma_hi))
    }

    /// Composite-Simpson tensor-grid posterior with `nodes` points per axis.
    pub fn quadrature(&self, nodes: usize) -> QuadraturePosterior {
        let nodes = if nodes.is_multiple_of(2) { nodes + 1 } else { nodes.max(3) };
        let ((t_lo, t_hi), (s_lo, s_hi)) = self.quadrature_window();
        let ht = (t_hi - t_lo) / (nodes - 1) as f64;
        let hs = (s_hi - s_lo) / (nodes - 1) as f64;
        let wt = simpson_weights(nodes, ht);
        let ws = simpson_weights(nodes, hs);

        let mut logs = Vec::with_capacity(nodes * nodes);
        let mut cells = Vec::with_capacity(nodes * nodes);
        for (i, wti) in wt.iter().enumerate() {
            let theta = t_lo + i as f64 * ht;
            for (j, wsj) in ws.iter().enumerate() {
                let sigma = s_lo + j as f64 * hs;
                let lj = self.log_joint(theta, sigma);
                logs.push(lj + (wti * wsj).ln());
                cells.push((theta, sigma));
            }
        }
        let log_z = log_sum_exp(&logs);
        let mut m = [0.0f64; 4];
        for (lw, (t, s)) in logs.iter().zip(&cells) {
            let p = (lw - log_z).exp();
            m[0] += p * t;
            m[1] += p * t * t;
            m[2] += p * s;
            m[3] += p * s * s;
        }
        QuadraturePosterior {
            log_evidence: log_z,
            theta_mean: m[0],
            theta_sd: (m[1] - m[0] * m[0]).max(0.0).sqrt(),
            sigma_mean: m[2],
            sigma_sd: (m[3] - m[2] * m[2]).max(0.0).sqrt(),
        }
    }
}
