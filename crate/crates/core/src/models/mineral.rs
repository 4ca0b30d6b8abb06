use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::likelihood::Covariance;
use super::prior::{Marginal, Prior};
use super::static_model::{ForwardModel, NoiseModel, StaticModel};
use crate::error::{Error, Result};

/// Known noise scale as a fraction of the model mean.
pub const KNOWN_NOISE_FRACTION: f64 = 0.04;

/// Length of the incubation window in days.
pub const HORIZON_DAYS: f64 = 301.0;

/// Uniform prior bounds on (θ₁, θ₂, θ₃).
pub const THETA_BOUNDS: [(f64, f64); 3] = [(50.0, 150.0), (0.002, 0.05), (0.0, 0.1)];

/// Cumulative growth curve `θ₁(1 − e^{−θ₂ t}) + θ₃ t`.
pub fn growth_curve(theta: &[f64], t: f64) -> f64 {
    theta[0] * (-(-theta[1] * t).exp_m1()) + theta[2] * t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MineralisationSpec {
    #[serde(default = "default_timepoints")]
    pub timepoints: usize,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_theta_true")]
    pub theta_true: [f64; 3],
    #[serde(default = "default_sigma_true")]
    pub sigma_true: f64,
    #[serde(default = "default_data_seed")]
    pub data_seed: u64,
}

fn default_timepoints() -> usize {
    16
}
fn default_replicates() -> usize {
    4
}
fn default_theta_true() -> [f64; 3] {
    [100.0, 0.01, 0.05]
}
fn default_sigma_true() -> f64 {
    8.0
}
fn default_data_seed() -> u64 {
    7_301
}

impl Default for MineralisationSpec {
    fn default() -> Self {
        Self {
            timepoints: default_timepoints(),
            replicates: default_replicates(),
            theta_true: default_theta_true(),
            sigma_true: default_sigma_true(),
            data_seed: default_data_seed(),
        }
    }
}

/// Frozen synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MineralisationFixture {
    pub grid: Vec<f64>,
    pub replicates: usize,
    /// Observations ordered timepoint-major: `y[j * replicates + r]`.
    pub y: Vec<f64>,
    pub theta_true: [f64; 3],
    pub sigma_true: f64,
    pub seed: u64,
}

impl MineralisationFixture {
    pub fn generate(spec: &MineralisationSpec) -> Result<Self> {
        if spec.timepoints < 2 || spec.replicates < 1 {
            return Err(Error::InvalidParameter(
                "mineralisation needs at least 2 timepoints and 1 replicate".into(),
            ));
        }
        if !(spec.sigma_true > 0.0) {
            return Err(Error::InvalidParameter("sigma_true must be positive".into()));
        }
        let t = spec.timepoints;
        let grid: Vec<f64> = (0..t)
            .map(|j| HORIZON_DAYS * j as f64 / (t - 1) as f64)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.data_seed);
        let mut y = Vec::with_capacity(t * spec.replicates);
        for &tj in &grid {
            let x = growth_curve(&spec.theta_true, tj);
            let sd = ((KNOWN_NOISE_FRACTION * x).powi(2) + spec.sigma_true.powi(2)).sqrt();
            for _ in 0..spec.replicates {
                let z: f64 = StandardNormal.sample(&mut rng);
                y.push(x + sd * z);
            }
        }
        Ok(Self {
            grid,
            replicates: spec.replicates,
            y,
            theta_true: spec.theta_true,
            sigma_true: spec.sigma_true,
            seed: spec.data_seed,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Builds the inference model with Γ(θ,σ) = diag((0.04·x_t)² + σ²).
    pub fn model(&self) -> Result<StaticModel> {
        let r = self.replicates;
        if r == 0 || self.y.len() != self.grid.len() * r {
            return Err(Error::DimensionMismatch {
                what: "fixture observations",
                expected: self.grid.len() * r,
                got: self.y.len(),
            });
        }
        let grid = self.grid.clone();
        let dy = grid.len() * r;
        let forward = ForwardModel::new(3, dy, move |theta| {
            DVector::from_iterator(
                dy,
                grid.iter()
                    .flat_map(|&t| std::iter::repeat_n(growth_curve(theta.as_slice(), t), r)),
            )
        });
        let noise = NoiseModel::new(1, true, |_, g, phi| {
            let s2 = phi[0] * phi[0];
            Covariance::Diagonal(g.map(|x| (KNOWN_NOISE_FRACTION * x).powi(2) + s2))
        });
        let prior_theta = Prior::independent(
            THETA_BOUNDS
                .iter()
                .map(|&(lower, upper)| Marginal::Uniform { lower, upper })
                .collect(),
        )?;
        let prior_phi = Prior::independent(vec![Marginal::Uniform {
            lower: 0.0,
            upper: 20.0 * self.sigma_true,
        }])?;
        Ok(StaticModel::new(
            forward,
            noise,
            prior_theta,
            prior_phi,
            DVector::from_vec(self.y.clone()),
        )?
        .with_names(&["theta1", "theta2", "theta3"], &["sigma"]))
    }
}

pub fn make_mineralisation_surrogate(spec: &MineralisationSpec) -> Result<StaticModel> {
    MineralisationFixture::generate(spec)?.model()
}
