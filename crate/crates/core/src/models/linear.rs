use nalgebra::{DMatrix, DVector};

use super::likelihood::Covariance;
use super::prior::Prior;
use super::static_model::{ForwardModel, NoiseModel, StaticModel};
use crate::error::{Error, Result};
use crate::stats::solve_spd;

/// `G(θ) = Aθ` with Gaussian prior and known Γ, plus its conjugate posterior.
#[derive(Debug)]
pub struct LinearGaussian {
    pub model: StaticModel,
    pub a: DMatrix<f64>,
    pub gamma0: DMatrix<f64>,
    pub prior_mean: DVector<f64>,
    pub prior_cov: DMatrix<f64>,
    pub posterior_mean: DVector<f64>,
    pub posterior_cov: DMatrix<f64>,
}

pub fn make_linear_gaussian(
    a: DMatrix<f64>,
    gamma0: DMatrix<f64>,
    prior_mean: DVector<f64>,
    prior_cov: DMatrix<f64>,
    y: DVector<f64>,
) -> Result<LinearGaussian> {
    let (dy, dt) = a.shape();
    if gamma0.shape() != (dy, dy) {
        return Err(Error::DimensionMismatch {
            what: "gamma0 size",
            expected: dy,
            got: gamma0.nrows(),
        });
    }
    if prior_mean.len() != dt || prior_cov.shape() != (dt, dt) {
        return Err(Error::DimensionMismatch {
            what: "prior dimension",
            expected: dt,
            got: prior_mean.len(),
        });
    }
    if y.len() != dy {
        return Err(Error::DimensionMismatch {
            what: "data length",
            expected: dy,
            got: y.len(),
        });
    }
    let (posterior_mean, posterior_cov) =
        conjugate_posterior(&a, &gamma0, &prior_mean, &prior_cov, &y, 1.0)?;

    let a_fwd = a.clone();
    let forward = ForwardModel::new(dt, dy, move |theta| &a_fwd * theta);
    let noise = NoiseModel::fixed(Covariance::Dense(gamma0.clone()));
    let prior = Prior::gaussian(prior_mean.clone(), prior_cov.clone())?;
    let model = StaticModel::new(forward, noise, prior, Prior::empty(), y)?;
    Ok(LinearGaussian {
        model,
        a,
        gamma0,
        prior_mean,
        prior_cov,
        posterior_mean,
        posterior_cov,
    })
}

/// Mean and covariance of `N(y | Aθ, γ₀)^α N(θ | μ, C)` normalized.
pub fn conjugate_posterior(
    a: &DMatrix<f64>,
    gamma0: &DMatrix<f64>,
    prior_mean: &DVector<f64>,
    prior_cov: &DMatrix<f64>,
    y: &DVector<f64>,
    alpha: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let dt = prior_mean.len();
    let prior_prec = solve_spd(prior_cov, &DMatrix::identity(dt, dt))?;
    let gi_a = solve_spd(gamma0, a)?;
    let gi_y = solve_spd(gamma0, &DMatrix::from_column_slice(y.len(), 1, y.as_slice()))?;
    let prec = &prior_prec + alpha * a.transpose() * &gi_a;
    let cov = solve_spd(&prec, &DMatrix::identity(dt, dt))?;
    let rhs = &prior_prec * prior_mean + alpha * (a.transpose() * gi_y).column(0);
    let mean = &cov * rhs;
    let cov = 0.5 * (&cov + cov.transpose());
    Ok((mean, cov))
}

impl LinearGaussian {
    /// Power posterior `π_α` (the tempered target at cumulative temperature α).
    pub fn tempered_posterior(&self, alpha: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
        conjugate_posterior(
            &self.a,
            &self.gamma0,
            &self.prior_mean,
            &self.prior_cov,
            &self.model.data,
            alpha,
        )
    }

    /// Covariance of the posterior predictive `A C_post Aᵀ + γ₀`.
    pub fn predictive_cov(&self) -> DMatrix<f64> {
        &self.a * &self.posterior_cov * self.a.transpose() + &self.gamma0
    }
}

/// The scalar model with `A = 1`, `γ₀ = 1`, prior `N(0, 1)` and `y = 1`.
pub fn scalar_conjugate() -> LinearGaussian {
    make_linear_gaussian(
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        DVector::from_element(1, 0.0),
        DMatrix::from_element(1, 1, 1.0),
        DVector::from_element(1, 1.0),
    )
    .expect("valid scalar model")
}
