use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("need at least {needed} ensemble members, got {got}")]
    TooFewMembers { needed: usize, got: usize },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("weights are not normalized (sum = {sum})")]
    Unnormalized { sum: f64 },

    #[error("all particles have zero weight")]
    ZeroWeights,

    #[error("all particles have zero weight at step {step}")]
    DegenerateWeights { step: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample {sample} coordinate {coord} is outside the {transform} transform domain ({value})")]
    OutOfDomain {
        sample: usize,
        coord: usize,
        value: f64,
        transform: &'static str,
    },

    #[error("sample covariance is singular; add jitter or drop parameters ({0})")]
    SingularCovariance(String),

    #[error(
        "ensemble collapsed at iteration {iteration} (alpha = {alpha}); try a larger target ESS"
    )]
    EnsembleCollapse { iteration: usize, alpha: f64 },

    #[error("ESS target {target} cannot be reached for any positive step")]
    TargetUnreachable { target: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
