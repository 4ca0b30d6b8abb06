use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{CovFactor, Covariance};
use crate::stats::{factor_with_jitter, sample_cov, sample_cross_cov, Ensemble};
use crate::streams::{stage, Streams};

/// Observation noise covariances for an update: shared by all particles
/// (known Γ) or one per particle (Γ depending on θ or φ).
#[derive(Debug, Clone)]
pub enum GammaSet {
    Shared(Covariance),
    PerParticle(Vec<Covariance>),
}

impl GammaSet {
    fn len(&self) -> Option<usize> {
        match self {
            GammaSet::Shared(_) => None,
            GammaSet::PerParticle(v) => Some(v.len()),
        }
    }
}

/// Standard normal draws, one column per particle from that particle's stream.
pub fn perturbation_draws(streams: &Streams, iteration: usize, dim: usize, n: usize) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(&[iteration as u64, i as u64, stage::PERTURB]);
            DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng))
        })
        .collect();
    DMatrix::from_columns(&cols)
}

fn singular(e: Error) -> Error {
    match e {
        Error::NotPositiveDefinite { pivot, value } => Error::SingularCovariance(format!(
            "predicted-observation covariance not positive definite after jitter (pivot {pivot}, value {value:e})"
        )),
        other => other,
    }
}

/// Ensemble Kalman measurement update of θ with inflated noise `h⁻¹Γ`.
///
/// Perturbed observations are `ỹ_n = g_n + h^{-1/2} L_n z_n` with `L_n L_nᵀ = Γ_n`
/// and `z` the supplied standard normal draws. The gain uses the sample
/// cross-covariance of θ with `g` and `Ĉ_n = cov(g) + h⁻¹Γ_n`, solved per
/// particle when Γ differs between particles.
pub fn eki_measurement_update(
    theta: &Ensemble,
    g: &Ensemble,
    y: &DVector<f64>,
    gammas: &GammaSet,
    h: f64,
    z: &DMatrix<f64>,
) -> Result<Ensemble> {
    let n = theta.size();
    let dy = y.len();
    if n < 2 {
        return Err(Error::TooFewMembers { needed: 2, got: n });
    }
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidParameter(format!("h must lie in (0, 1], got {h}")));
    }
    if g.size() != n || g.dim() != dy {
        return Err(Error::DimensionMismatch {
            what: "forward-evaluation cache",
            expected: dy,
            got: g.dim(),
        });
    }
    if z.shape() != (dy, n) {
        return Err(Error::DimensionMismatch {
            what: "perturbation draws",
            expected: n,
            got: z.ncols(),
        });
    }
    if let Some(len) = gammas.len() {
        if len != n {
            return Err(Error::DimensionMismatch {
                what: "per-particle covariances",
                expected: n,
                got: len,
            });
        }
    }
    let c_tg = sample_cross_cov(theta, g)?;
    let c_gg = sample_cov(g)?;
    let inv_h = 1.0 / h;
    let scale = inv_h.sqrt();

    let perturbed = |i: usize, factor: &CovFactor| -> DVector<f64> {
        let zi = z.column(i).into_owned();
        let noise = match factor {
            CovFactor::Diagonal(s) => s.component_mul(&zi),
            CovFactor::Dense(c) => c.mul_lower(&zi),
        };
        y - (g.matrix().column(i) + scale * noise)
    };

    let updates: Vec<DVector<f64>> = match gammas {
        GammaSet::Shared(gamma) => {
            let factor = gamma.factor()?;
            let mut c_yy = c_gg.clone();
            gamma.scaled(inv_h).add_to(&mut c_yy);
            let chol = factor_with_jitter(&c_yy).map_err(singular)?;
            let mut residuals = DMatrix::zeros(dy, n);
            for i in 0..n {
                residuals.set_column(i, &perturbed(i, &factor));
            }
            let solved = chol.solve(&residuals);
            let delta = &c_tg * solved;
            (0..n).map(|i| delta.column(i).into_owned()).collect()
        }
        GammaSet::PerParticle(list) => (0..n)
            .into_par_iter()
            .map(|i| {
                let gamma = &list[i];
                let factor = gamma.factor()?;
                let mut c_yy = c_gg.clone();
                gamma.scaled(inv_h).add_to(&mut c_yy);
                let chol = factor_with_jitter(&c_yy).map_err(singular)?;
                Ok(&c_tg * chol.solve_vec(&perturbed(i, &factor)))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let mut out = theta.matrix().clone();
    for (i, d) in updates.iter().enumerate() {
        let mut col = out.column_mut(i);
        col += d;
    }
    Ensemble::new(out)
}
