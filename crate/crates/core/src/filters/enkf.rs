use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FilterOutput, Ssm};
use crate::error::{Error, Result};
use crate::stats::{sample_cov, sample_cross_cov, sample_mean, solve_spd_jitter, Ensemble};
use crate::streams::{stage, Streams};

/// How the EnKF estimates the predicted-observation covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnkfVariant {
    /// Sample covariance of simulated observations `ỹ ~ g(· | x̃)`.
    #[default]
    PerturbedObs,
    /// Sample covariance of `G(x̃)` plus the known Γ.
    GaussianObs,
}

#[derive(Debug, Clone)]
pub struct EnkfOutput {
    pub filter: FilterOutput,
    pub ensemble: Ensemble,
    /// The `Ĉ^{ỹỹ}` used at each step.
    pub innovation_covs: Vec<DMatrix<f64>>,
}

/// Forecast state, simulated observation and (gaussian_obs only) `G(x̃)`.
type Predicted = (DVector<f64>, DVector<f64>, Option<DVector<f64>>);

pub fn enkf<M: Ssm>(
    m: &M,
    y: &[DVector<f64>],
    n: usize,
    variant: EnkfVariant,
    streams: &Streams,
) -> Result<EnkfOutput> {
    if n < 2 {
        return Err(Error::TooFewMembers { needed: 2, got: n });
    }
    let gamma = match variant {
        EnkfVariant::GaussianObs => Some(m.obs_cov().ok_or_else(|| {
            Error::InvalidParameter("gaussian_obs variant needs a Gaussian observation model".into())
        })?),
        EnkfVariant::PerturbedObs => None,
    };
    let dy = m.dim_y();

    let init: Vec<DVector<f64>> = (0..n)
        .into_par_iter()
        .map(|i| m.init_sample(&mut streams.rng(&[0, i as u64, stage::INIT])))
        .collect();
    let mut ensemble = Ensemble::from_columns(&init)?;
    let mut out = EnkfOutput {
        filter: FilterOutput::default(),
        ensemble: ensemble.clone(),
        innovation_covs: Vec::with_capacity(y.len()),
    };

    for (step, yt) in y.iter().enumerate() {
        let t = step as u64 + 1;
        if yt.len() != dy {
            return Err(Error::DimensionMismatch {
                what: "observation length",
                expected: dy,
                got: yt.len(),
            });
        }
        let members = ensemble.columns();
        let predicted: Vec<Predicted> = members
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let xt = m.transition_sample(x, &mut streams.rng(&[t, i as u64, stage::TRANSITION]));
                let mut obs_rng = streams.rng(&[t, i as u64, stage::OBSERVE]);
                match gamma {
                    None => {
                        let yt = m.obs_sample(&xt, &mut obs_rng);
                        (xt, yt, None)
                    }
                    Some(_) => {
                        let g = m.obs_mean(&xt).expect("Gaussian observation model has a mean");
                        let yt = m.obs_sample(&xt, &mut obs_rng);
                        (xt, yt, Some(g))
                    }
                }
            })
            .collect();
        let x_pred = Ensemble::from_columns(&predicted.iter().map(|p| p.0.clone()).collect::<Vec<_>>())?;
        let y_pred = Ensemble::from_columns(&predicted.iter().map(|p| p.1.clone()).collect::<Vec<_>>())?;

        let (c_xy, c_yy) = match gamma {
            None => (sample_cross_cov(&x_pred, &y_pred)?, sample_cov(&y_pred)?),
            Some(gamma) => {
                let g = Ensemble::from_columns(
                    &predicted.iter().map(|p| p.2.clone().unwrap()).collect::<Vec<_>>(),
                )?;
                let mut c_yy = sample_cov(&g)?;
                gamma.add_to(&mut c_yy);
                (sample_cross_cov(&x_pred, &g)?, c_yy)
            }
        };

        let mut residuals = DMatrix::zeros(dy, n);
        for i in 0..n {
            residuals.set_column(i, &(yt - y_pred.matrix().column(i)));
        }
        let solved = solve_spd_jitter(&c_yy, &residuals).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => {
                Error::SingularCovariance(format!("predicted-observation covariance at step {t}"))
            }
            other => other,
        })?;
        let updated = x_pred.matrix() + &c_xy * solved;
        ensemble = Ensemble::new(updated)?;
        out.filter.means.push(sample_mean(&ensemble)?);
        out.filter.covs.push(sample_cov(&ensemble)?);
        out.innovation_covs.push(c_yy);
    }
    out.ensemble = ensemble;
    Ok(out)
}
