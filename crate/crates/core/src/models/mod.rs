pub mod likelihood;
pub mod linear;
pub mod mineral;
pub mod prior;
pub mod scalar_sigma;
pub mod static_model;

pub use likelihood::{gaussian_loglik, CovFactor, Covariance};
pub use linear::{conjugate_posterior, make_linear_gaussian, scalar_conjugate, LinearGaussian};
pub use mineral::{make_mineralisation_surrogate, MineralisationFixture, MineralisationSpec};
pub use prior::{Marginal, Prior};
pub use scalar_sigma::{make_scalar_sigma_model, QuadraturePosterior, ScalarSigma, ScalarSigmaSpec};
pub use static_model::{ForwardModel, NoiseModel, StaticModel};
