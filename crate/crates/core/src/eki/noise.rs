use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::Result;
use crate::models::StaticModel;
use crate::stats::{Cholesky, Ensemble};
use crate::streams::{stage, Streams};
use crate::tempersmc::{tempered, MutationStats};

/// Random-walk Metropolis–Hastings on φ given θ, targeting
/// `N(y | g_n, Γ(θ_n, φ))^α p(φ)`, `sweeps` steps per particle.
///
/// θ and its cached forward evaluations are read only, so no forward-model
/// calls are made. With independent θ and φ priors the θ factor of the
/// joint prior cancels from every acceptance ratio.
#[allow(clippy::too_many_arguments)]
pub fn noise_mcmc_update(
    model: &StaticModel,
    theta: &Ensemble,
    g: &Ensemble,
    phi: &Ensemble,
    alpha: f64,
    proposal: &Cholesky,
    sweeps: usize,
    streams: &Streams,
    iteration: usize,
) -> Result<(Ensemble, MutationStats)> {
    let n = phi.size();
    let d = phi.dim();
    if d == 0 || sweeps == 0 {
        return Ok((phi.clone(), MutationStats::default()));
    }
    let results: Vec<(DVector<f64>, u64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(&[iteration as u64, i as u64, stage::NOISE]);
            let t = theta.column(i);
            let gi = g.column(i);
            let mut cur = phi.column(i);
            let mut lp = model.prior_phi.log_pdf(cur.as_slice()).unwrap_or(f64::NEG_INFINITY);
            let mut ll = model.loglik(&t, &gi, &cur);
            let mut accepted = 0u64;
            for _ in 0..sweeps {
                let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
                let cand = &cur + proposal.mul_lower(&z);
                let u: f64 = rng.random();
                let lp_c = model.prior_phi.log_pdf(cand.as_slice()).unwrap_or(f64::NEG_INFINITY);
                if lp_c == f64::NEG_INFINITY {
                    continue;
                }
                let ll_c = model.loglik(&t, &gi, &cand);
                let log_ratio = tempered(alpha, ll_c) - tempered(alpha, ll) + lp_c - lp;
                if !log_ratio.is_nan() && u.ln() <= log_ratio {
                    cur = cand;
                    lp = lp_c;
                    ll = ll_c;
                    accepted += 1;
                }
            }
            (cur, accepted)
        })
        .collect();
    let accepted = results.iter().map(|r| r.1).sum();
    let cols: Vec<DVector<f64>> = results.into_iter().map(|r| r.0).collect();
    Ok((
        Ensemble::new(DMatrix::from_columns(&cols))?,
        MutationStats {
            proposals: (n * sweeps) as u64,
            accepted,
        },
    ))
}
