use nalgebra::DVector;
use rayon::prelude::*;

use super::{FilterOutput, Ssm};
use crate::error::{Error, Result};
use crate::stats::{log_sum_exp, normalize_log_weights, systematic_indices, weighted_cov, weighted_mean, Ensemble};
use crate::streams::{stage, Streams};

/// Bootstrap particle filter with systematic resampling at every step.
///
/// The log-likelihood estimate is `Σ_t log((1/N) Σ_n w_t^n)` with unnormalized
/// weights `w_t^n = g(y_t | x_t^n)`.
pub fn bootstrap_pf<M: Ssm>(m: &M, y: &[DVector<f64>], n: usize, streams: &Streams) -> Result<FilterOutput> {
    if n < 2 {
        return Err(Error::TooFewMembers { needed: 2, got: n });
    }
    let dy = m.dim_y();
    let mut particles: Vec<DVector<f64>> = (0..n)
        .into_par_iter()
        .map(|i| m.init_sample(&mut streams.rng(&[0, i as u64, stage::INIT])))
        .collect();
    let mut weights = crate::stats::WeightVector::uniform(n);
    let mut out = FilterOutput {
        loglik: Some(0.0),
        ..Default::default()
    };
    let mut loglik = 0.0;
    let log_n = (n as f64).ln();

    for (step, yt) in y.iter().enumerate() {
        let t = step as u64 + 1;
        if yt.len() != dy {
            return Err(Error::DimensionMismatch {
                what: "observation length",
                expected: dy,
                got: yt.len(),
            });
        }
        out.ess.push(weights.ess());
        let idx = systematic_indices(&weights, &mut streams.rng(&[t, stage::RESAMPLE]));
        let parents: Vec<&DVector<f64>> = idx.iter().map(|&i| &particles[i]).collect();
        let (next, logw): (Vec<DVector<f64>>, Vec<f64>) = parents
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let xt = m.transition_sample(x, &mut streams.rng(&[t, i as u64, stage::TRANSITION]));
                let lw = m.obs_logpdf(yt, &xt);
                (xt, if lw.is_nan() { f64::NEG_INFINITY } else { lw })
            })
            .unzip();
        particles = next;
        weights = normalize_log_weights(&logw).map_err(|_| Error::DegenerateWeights { step: step + 1 })?;
        loglik += log_sum_exp(&logw) - log_n;
        let e = Ensemble::from_columns(&particles)?;
        out.means.push(weighted_mean(&e, &weights));
        out.covs.push(weighted_cov(&e, &weights));
    }
    out.loglik = Some(loglik);
    Ok(out)
}
