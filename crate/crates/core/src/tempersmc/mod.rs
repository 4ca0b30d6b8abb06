//! Adaptive likelihood-tempering sequential Monte Carlo for static models.

mod adapt;
mod mutate;
mod run;

pub use adapt::{adapt_alpha, adapt_repeats, reweight, tempered, ALPHA_TOLERANCE, MAX_BISECTIONS, MAX_REPEATS};
pub use mutate::{mh_mutate, MutationStats, Particle, TemperState};
pub use run::{initialize, smc_run, ProposalScale, SmcConfig};
