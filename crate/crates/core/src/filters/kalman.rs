use nalgebra::{DMatrix, DVector};

use super::{FilterOutput, Lgssm};
use crate::error::{Error, Result};
use crate::stats::Cholesky;

/// Exact filtering recursions, plus the marginal log-likelihood
/// `Σ_t log N(y_t | H x̃_t, H C̃_t Hᵀ + R)`.
pub fn kalman_filter(m: &Lgssm, y: &[DVector<f64>]) -> Result<FilterOutput> {
    let dx = m.x0_mean.len();
    let dy = m.h.nrows();
    let mut mean = m.x0_mean.clone();
    let mut cov = m.c0.clone();
    let mut out = FilterOutput {
        loglik: Some(0.0),
        ..Default::default()
    };
    let mut loglik = 0.0;
    for (t, yt) in y.iter().enumerate() {
        if yt.len() != dy {
            return Err(Error::DimensionMismatch {
                what: "observation length",
                expected: dy,
                got: yt.len(),
            });
        }
        let pred_mean = &m.f * &mean;
        let pred_cov = &m.f * &cov * m.f.transpose() + &m.q;
        let s = &m.h * &pred_cov * m.h.transpose() + &m.r;
        let s_chol = Cholesky::new(&(0.5 * (&s + s.transpose()))).inspect_err(|_| {
            log::error!("innovation covariance not positive definite at step {}", t + 1);
        })?;
        let innovation = yt - &m.h * &pred_mean;
        // K = C̃Hᵀ S⁻¹ computed as (S⁻¹ H C̃)ᵀ
        let gain = s_chol.solve(&(&m.h * &pred_cov)).transpose();
        mean = &pred_mean + &gain * &innovation;
        let c = (DMatrix::identity(dx, dx) - &gain * &m.h) * &pred_cov;
        cov = 0.5 * (&c + c.transpose());
        loglik += -0.5
            * (dy as f64 * (2.0 * std::f64::consts::PI).ln()
                + s_chol.log_det()
                + s_chol.quad_form(&innovation));
        out.means.push(mean.clone());
        out.covs.push(cov.clone());
    }
    out.loglik = Some(loglik);
    Ok(out)
}
