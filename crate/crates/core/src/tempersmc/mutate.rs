use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::adapt::tempered;
use crate::models::StaticModel;
use crate::stats::Cholesky;
use crate::streams::{stage, Streams};

/// One SMC particle over the joint `(θ, φ)` vector with its cached
/// forward evaluation, log-likelihood and log-prior.
#[derive(Debug, Clone)]
pub struct Particle {
    pub x: DVector<f64>,
    pub g: DVector<f64>,
    pub loglik: f64,
    pub logprior: f64,
}

impl Particle {
    /// Evaluates `G` once and fills the caches.
    pub fn evaluate(model: &StaticModel, x: DVector<f64>) -> Self {
        let dt = model.dim_theta();
        let theta = x.rows(0, dt).into_owned();
        let phi = x.rows(dt, model.dim_phi()).into_owned();
        let g = model.forward.evaluate(&theta);
        let logprior = model.log_prior(theta.as_slice(), phi.as_slice());
        let loglik = if logprior == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            model.loglik(&theta, &g, &phi)
        };
        Self {
            x,
            g,
            loglik,
            logprior,
        }
    }
}

/// Population of particles targeting `p(y | θ, φ)^α p(θ, φ)`.
#[derive(Debug, Clone)]
pub struct TemperState {
    pub particles: Vec<Particle>,
    pub alpha: f64,
    pub j: usize,
}

impl TemperState {
    pub fn logliks(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.loglik).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MutationStats {
    pub proposals: u64,
    pub accepted: u64,
}

impl MutationStats {
    pub fn rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    pub fn merge(self, other: MutationStats) -> MutationStats {
        MutationStats {
            proposals: self.proposals + other.proposals,
            accepted: self.accepted + other.accepted,
        }
    }
}

/// `repeats` random-walk Metropolis–Hastings steps per particle with proposal
/// `x* = x + L z`. Every proposal evaluates `G` once, including proposals that
/// fall outside the prior support.
///
/// `phase` separates the random streams of several calls within one iteration.
pub fn mh_mutate(
    state: &mut TemperState,
    model: &StaticModel,
    repeats: usize,
    proposal: &Cholesky,
    streams: &Streams,
    phase: u64,
) -> MutationStats {
    let alpha = state.alpha;
    let j = state.j as u64;
    let accepted: u64 = state
        .particles
        .par_iter_mut()
        .enumerate()
        .map(|(n, p)| {
            let mut rng = streams.rng(&[j, n as u64, stage::MUTATE, phase]);
            let mut acc = 0u64;
            for _ in 0..repeats {
                let z = DVector::from_fn(p.x.len(), |_, _| StandardNormal.sample(&mut rng));
                let cand = Particle::evaluate(model, &p.x + proposal.mul_lower(&z));
                let log_ratio = tempered(alpha, cand.loglik) - tempered(alpha, p.loglik) + cand.logprior
                    - p.logprior;
                let u: f64 = rng.random();
                if cand.logprior > f64::NEG_INFINITY && !log_ratio.is_nan() && u.ln() <= log_ratio {
                    *p = cand;
                    acc += 1;
                }
            }
            acc
        })
        .sum();
    MutationStats {
        proposals: (repeats * state.particles.len()) as u64,
        accepted,
    }
}
