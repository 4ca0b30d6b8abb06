//! State-space filtering: exact Kalman recursions, the ensemble Kalman
//! filter and the bootstrap particle filter.

mod enkf;
mod kalman;
mod pf;
mod ssm;

pub use enkf::{enkf, EnkfOutput, EnkfVariant};
pub use kalman::kalman_filter;
pub use pf::bootstrap_pf;
pub use ssm::{Lgssm, Ssm};

use nalgebra::{DMatrix, DVector};

/// Per-step filtering summaries.
#[derive(Debug, Clone, Default)]
pub struct FilterOutput {
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
    /// Marginal log-likelihood (exact for Kalman, estimated for the particle filter).
    pub loglik: Option<f64>,
    /// Effective sample size before each resampling step (particle filter only).
    pub ess: Vec<f64>,
}

impl FilterOutput {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }
}
