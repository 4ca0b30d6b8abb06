//! Ensemble statistics, importance weights, resampling and SPD solves shared
//! by every inference algorithm in the crate.

mod ensemble;
mod spd;
mod weights;

pub use ensemble::{sample_cov, sample_cross_cov, sample_mean, Ensemble};
pub use spd::{factor_with_jitter, proposal_factor, solve_spd, solve_spd_jitter, Cholesky};
pub use weights::{
    ess, log_sum_exp, normalize_log_weights, resample, resample_indices, resample_systematic,
    systematic_indices, weighted_cov, weighted_mean, ResampleScheme, WeightVector,
};
