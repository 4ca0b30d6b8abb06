use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;

use super::likelihood::Covariance;
use super::prior::Prior;
use crate::error::{Error, Result};

type ForwardFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type GammaFn = dyn Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> Covariance + Send + Sync;

/// Deterministic map `θ -> G(θ)` with an evaluation counter.
///
/// The counter is the cost metric reported by every algorithm, so all
/// evaluations must go through [`ForwardModel::evaluate`].
pub struct ForwardModel {
    dim_theta: usize,
    dim_y: usize,
    f: Arc<ForwardFn>,
    calls: AtomicU64,
}

impl ForwardModel {
    pub fn new<F>(dim_theta: usize, dim_y: usize, f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            dim_theta,
            dim_y,
            f: Arc::new(f),
            calls: AtomicU64::new(0),
        }
    }

    pub fn dim_theta(&self) -> usize {
        self.dim_theta
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn evaluate(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        (self.f)(theta)
    }

    pub fn evaluations(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset_counter(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }
}

impl fmt::Debug for ForwardModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForwardModel")
            .field("dim_theta", &self.dim_theta)
            .field("dim_y", &self.dim_y)
            .field("evaluations", &self.evaluations())
            .finish()
    }
}

/// Noise covariance `Γ(θ, φ)`.
///
/// The closure receives `(θ, G(θ), φ)` so that state-dependent noise can reuse
/// a cached forward evaluation instead of calling `G` again.
pub struct NoiseModel {
    dim_phi: usize,
    depends_on_theta: bool,
    gamma: Arc<GammaFn>,
}

impl NoiseModel {
    pub fn new<F>(dim_phi: usize, depends_on_theta: bool, gamma: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> Covariance + Send + Sync + 'static,
    {
        Self {
            dim_phi,
            depends_on_theta,
            gamma: Arc::new(gamma),
        }
    }

    /// Fixed, known covariance with no noise parameters.
    pub fn fixed(gamma: Covariance) -> Self {
        Self::new(0, false, move |_, _, _| gamma.clone())
    }

    pub fn dim_phi(&self) -> usize {
        self.dim_phi
    }

    pub fn depends_on_theta(&self) -> bool {
        self.depends_on_theta
    }

    /// True when Γ is the same for every particle.
    pub fn is_fixed(&self) -> bool {
        self.dim_phi == 0 && !self.depends_on_theta
    }

    pub fn gamma(&self, theta: &DVector<f64>, g: &DVector<f64>, phi: &DVector<f64>) -> Covariance {
        (self.gamma)(theta, g, phi)
    }
}

impl fmt::Debug for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoiseModel")
            .field("dim_phi", &self.dim_phi)
            .field("depends_on_theta", &self.depends_on_theta)
            .finish()
    }
}

/// `y = G(θ) + η`, `η ~ N(0, Γ(θ, φ))`, with priors on θ and φ.
#[derive(Debug)]
pub struct StaticModel {
    pub forward: ForwardModel,
    pub noise: NoiseModel,
    pub prior_theta: Prior,
    pub prior_phi: Prior,
    pub data: DVector<f64>,
    pub theta_names: Vec<String>,
    pub phi_names: Vec<String>,
}

impl StaticModel {
    pub fn new(
        forward: ForwardModel,
        noise: NoiseModel,
        prior_theta: Prior,
        prior_phi: Prior,
        data: DVector<f64>,
    ) -> Result<Self> {
        if data.len() != forward.dim_y() {
            return Err(Error::DimensionMismatch {
                what: "data length",
                expected: forward.dim_y(),
                got: data.len(),
            });
        }
        if prior_theta.dim() != forward.dim_theta() {
            return Err(Error::DimensionMismatch {
                what: "theta prior dimension",
                expected: forward.dim_theta(),
                got: prior_theta.dim(),
            });
        }
        if prior_phi.dim() != noise.dim_phi() {
            return Err(Error::DimensionMismatch {
                what: "phi prior dimension",
                expected: noise.dim_phi(),
                got: prior_phi.dim(),
            });
        }
        let theta_names = (1..=forward.dim_theta()).map(|i| format!("theta{i}")).collect();
        let phi_names = (1..=noise.dim_phi()).map(|i| format!("phi{i}")).collect();
        Ok(Self {
            forward,
            noise,
            prior_theta,
            prior_phi,
            data,
            theta_names,
            phi_names,
        })
    }

    pub fn with_names(mut self, theta: &[&str], phi: &[&str]) -> Self {
        assert_eq!(theta.len(), self.dim_theta());
        assert_eq!(phi.len(), self.dim_phi());
        self.theta_names = theta.iter().map(|s| s.to_string()).collect();
        self.phi_names = phi.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn dim_theta(&self) -> usize {
        self.forward.dim_theta()
    }

    pub fn dim_phi(&self) -> usize {
        self.noise.dim_phi()
    }

    pub fn dim_y(&self) -> usize {
        self.forward.dim_y()
    }

    pub fn param_names(&self) -> Vec<String> {
        self.theta_names.iter().chain(&self.phi_names).cloned().collect()
    }

    pub fn gamma(&self, theta: &DVector<f64>, g: &DVector<f64>, phi: &DVector<f64>) -> Covariance {
        self.noise.gamma(theta, g, phi)
    }

    /// `log N(y | g, Γ(θ, φ))` for a cached `g = G(θ)`; `-inf` if Γ is not PD.
    pub fn loglik(&self, theta: &DVector<f64>, g: &DVector<f64>, phi: &DVector<f64>) -> f64 {
        match self.gamma(theta, g, phi).factor() {
            Ok(f) => {
                let ll = f.loglik(&self.data, g);
                if ll.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    ll
                }
            }
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Joint log prior with independent θ and φ blocks.
    pub fn log_prior(&self, theta: &[f64], phi: &[f64]) -> f64 {
        let lt = self.prior_theta.log_pdf(theta).unwrap_or(f64::NEG_INFINITY);
        if lt == f64::NEG_INFINITY {
            return lt;
        }
        lt + self.prior_phi.log_pdf(phi).unwrap_or(f64::NEG_INFINITY)
    }

    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, DVector<f64>) {
        let theta = self.prior_theta.sample(rng);
        let phi = self.prior_phi.sample(rng);
        (theta, phi)
    }
}
