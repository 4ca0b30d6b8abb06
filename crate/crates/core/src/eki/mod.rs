//! Iterative ensemble Kalman inversion, with a component-wise variant that
//! samples unknown noise parameters by Metropolis–Hastings between updates.

mod noise;
mod run;
mod update;
mod weights;

pub use noise::noise_mcmc_update;
pub use run::{cw_ieki_run, EkiConfig, ThetaSpace, COLLAPSE_RATIO};
pub use update::{eki_measurement_update, perturbation_draws, GammaSet};
pub use weights::{adapt_h, adapt_step, cw_increment_weights, LikelihoodTerms, WeightRule};
