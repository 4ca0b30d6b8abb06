use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adapt::{adapt_alpha, adapt_repeats, reweight, MAX_REPEATS};
use super::mutate::{mh_mutate, Particle, TemperState};
use crate::error::{Error, Result};
use crate::models::StaticModel;
use crate::report::{Method, RunReport, RunResult};
use crate::stats::{proposal_factor, resample_indices, sample_cov, Ensemble, ResampleScheme};
use crate::streams::{stage, Streams};

/// Scaling applied to the particle covariance to form the random-walk proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalScale {
    /// Proposal covariance equals the particle covariance.
    #[default]
    Unit,
    /// `2.38² / d` times the particle covariance.
    #[serde(rename = "optimal_2.38")]
    Optimal,
}

impl ProposalScale {
    pub fn factor(&self, dim: usize) -> f64 {
        match self {
            ProposalScale::Unit => 1.0,
            ProposalScale::Optimal => 2.38 * 2.38 / dim.max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcConfig {
    pub n: usize,
    #[serde(default = "default_ess_fraction")]
    pub ess_target_fraction: f64,
    /// MCMC adaptation constant; `1 − c` is the probability that a particle moves.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_s1")]
    pub s1: usize,
    #[serde(default = "default_max_repeats")]
    pub max_repeats: usize,
    #[serde(default)]
    pub proposal_scale: ProposalScale,
    #[serde(default)]
    pub resample: ResampleScheme,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_ess_fraction() -> f64 {
    0.5
}
fn default_c() -> f64 {
    0.01
}
fn default_s1() -> usize {
    5
}
fn default_max_repeats() -> usize {
    MAX_REPEATS
}
fn default_max_iterations() -> usize {
    1000
}

impl SmcConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            ess_target_fraction: default_ess_fraction(),
            c: default_c(),
            s1: default_s1(),
            max_repeats: default_max_repeats(),
            proposal_scale: ProposalScale::default(),
            resample: ResampleScheme::default(),
            max_iterations: default_max_iterations(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewMembers { needed: 2, got: self.n });
        }
        if !(self.ess_target_fraction > 0.0 && self.ess_target_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ess_target_fraction must lie in (0, 1), got {}",
                self.ess_target_fraction
            )));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::InvalidParameter(format!("c must lie in (0, 1), got {}", self.c)));
        }
        if self.s1 == 0 || self.max_repeats < self.s1 {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= s1 <= max_repeats, got s1 = {}, max_repeats = {}",
                self.s1, self.max_repeats
            )));
        }
        Ok(())
    }
}

/// Draws the initial population from the prior (one `G` call per particle).
pub fn initialize(model: &StaticModel, n: usize, streams: &Streams) -> TemperState {
    let particles = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(&[0, i as u64, stage::INIT]);
            let (theta, phi) = model.sample_prior(&mut rng);
            let x = nalgebra::DVector::from_iterator(
                theta.len() + phi.len(),
                theta.iter().chain(phi.iter()).copied(),
            );
            Particle::evaluate(model, x)
        })
        .collect();
    TemperState {
        particles,
        alpha: 0.0,
        j: 0,
    }
}

/// Adaptive likelihood-tempering SMC with resample–move steps.
pub fn smc_run(model: &StaticModel, cfg: &SmcConfig) -> Result<RunResult> {
    cfg.validate()?;
    let n = cfg.n;
    let dim = model.dim_theta() + model.dim_phi();
    let streams = Streams::new(cfg.seed);
    let target = cfg.ess_target_fraction * n as f64;
    let start_evals = model.forward.evaluations();
    let mut report = RunReport::new(Method::Smc, cfg.seed, n, cfg.ess_target_fraction, model.param_names());

    let mut state = initialize(model, n, &streams);
    let mut pilot = cfg.s1;
    let mut total_repeats = 0usize;

    while state.alpha < 1.0 {
        if state.j >= cfg.max_iterations {
            return Err(Error::InvalidParameter(format!(
                "tempering did not reach alpha = 1 within {} iterations (alpha = {})",
                cfg.max_iterations, state.alpha
            )));
        }
        state.j += 1;
        let j = state.j;
        let logliks = state.logliks();
        let alpha = adapt_alpha(&logliks, state.alpha, target)?;
        let weights = reweight(&logliks, state.alpha, alpha).map_err(|_| Error::DegenerateWeights { step: j })?;
        let ess = weights.ess();
        let idx = resample_indices(&weights, cfg.resample, &mut streams.rng(&[j as u64, stage::RESAMPLE]));
        state.particles = idx.iter().map(|&i| state.particles[i].clone()).collect();
        report.increments.push(alpha - state.alpha);
        state.alpha = alpha;

        let cov = sample_cov(&joint_ensemble(&state)?)?;
        let proposal = proposal_factor(&cov, cfg.proposal_scale.factor(dim))?;
        let first = mh_mutate(&mut state, model, pilot, &proposal, &streams, 0);
        let m = adapt_repeats(first.rate(), cfg.c, cfg.s1, cfg.max_repeats);
        let remaining = m.saturating_sub(pilot);
        let second = mh_mutate(&mut state, model, remaining, &proposal, &streams, 1);
        let performed = pilot + remaining;
        total_repeats += performed;
        log::debug!(
            "smc iteration {j}: alpha = {alpha:.6}, ess = {ess:.1}, pilot acceptance = {:.3}, repeats = {performed}",
            first.rate()
        );

        report.alphas.push(alpha);
        report.ess.push(ess);
        report.repeats.push(performed);
        report.acceptance.push(first.merge(second).rate());
        pilot = (m / 2).max(1);
    }

    let evals = model.forward.evaluations() - start_evals;
    report.g_evals = evals;
    report.g_evals_updates = evals - n as u64;
    report.g_evals_textbook = (n * total_repeats) as u64 + 1;
    Ok(RunResult {
        samples: joint_ensemble(&state)?.into_matrix(),
        report,
    })
}

fn joint_ensemble(state: &TemperState) -> Result<Ensemble> {
    let d = state.particles.first().map(|p| p.x.len()).unwrap_or(0);
    let mut m = DMatrix::zeros(d, state.particles.len());
    for (i, p) in state.particles.iter().enumerate() {
        m.set_column(i, &p.x);
    }
    Ensemble::new(m)
}
