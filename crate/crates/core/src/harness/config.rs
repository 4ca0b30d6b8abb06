use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::eki::{EkiConfig, ThetaSpace, WeightRule};
use crate::error::{Error, Result};
use crate::filters::{EnkfVariant, Lgssm};
use crate::models::{
    make_linear_gaussian, make_scalar_sigma_model, LinearGaussian, MineralisationFixture, MineralisationSpec, ScalarSigmaSpec,
    StaticModel,
};
use crate::report::Method;
use crate::stats::ResampleScheme;
use crate::tempersmc::{ProposalScale, SmcConfig};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGaussianSpec {
    /// Rows of the design matrix `A`.
    pub a: Vec<Vec<f64>>,
    pub gamma0: Vec<Vec<f64>>,
    pub prior_mean: Vec<f64>,
    pub prior_cov: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LgssmSpec {
    pub f: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub x0_mean: Vec<f64>,
    pub c0: Vec<Vec<f64>>,
    /// Number of simulated observations.
    pub steps: usize,
    pub data_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    LinearGaussian(LinearGaussianSpec),
    ScalarSigma(ScalarSigmaSpec),
    Mineralisation(MineralisationSpec),
    Lgssm(LgssmSpec),
}

fn matrix(rows: &[Vec<f64>], what: &'static str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map(Vec::len).unwrap_or(0);
    if let Some(bad) = rows.iter().find(|row| row.len() != c) {
        return Err(Error::DimensionMismatch {
            what,
            expected: c,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::LinearGaussian(_) => "linear_gaussian",
            ModelSpec::ScalarSigma(_) => "scalar_sigma",
            ModelSpec::Mineralisation(_) => "mineralisation",
            ModelSpec::Lgssm(_) => "lgssm",
        }
    }

    pub fn is_state_space(&self) -> bool {
        matches!(self, ModelSpec::Lgssm(_))
    }

    pub fn build_linear_gaussian(&self) -> Result<LinearGaussian> {
        let ModelSpec::LinearGaussian(s) = self else {
            return Err(Error::Config(format!("{} is not a linear_gaussian model", self.kind())));
        };
        make_linear_gaussian(
            matrix(&s.a, "A rows")?,
            matrix(&s.gamma0, "gamma0 rows")?,
            DVector::from_vec(s.prior_mean.clone()),
            matrix(&s.prior_cov, "prior_cov rows")?,
            DVector::from_vec(s.y.clone()),
        )
    }

    pub fn build_static(&self) -> Result<StaticModel> {
        match self {
            ModelSpec::LinearGaussian(_) => Ok(self.build_linear_gaussian()?.model),
            ModelSpec::ScalarSigma(s) => Ok(make_scalar_sigma_model(s)?.model),
            ModelSpec::Mineralisation(s) => MineralisationFixture::generate(s)?.model(),
            ModelSpec::Lgssm(_) => Err(Error::Config(
                "lgssm is a state-space model; use method kalman, enkf or pf".into(),
            )),
        }
    }

    pub fn build_lgssm(&self) -> Result<(Lgssm, &LgssmSpec)> {
        match self {
            ModelSpec::Lgssm(s) => Ok((
                Lgssm::new(
                    matrix(&s.f, "F rows")?,
                    matrix(&s.q, "Q rows")?,
                    matrix(&s.h, "H rows")?,
                    matrix(&s.r, "R rows")?,
                    DVector::from_vec(s.x0_mean.clone()),
                    matrix(&s.c0, "C0 rows")?,
                )?,
                s,
            )),
            other => Err(Error::Config(format!(
                "{} is a static model; filters need an lgssm model",
                other.kind()
            ))),
        }
    }
}

/// Optional SMC tuning beyond the shared fields.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcOptions {
    pub c: Option<f64>,
    pub s1: Option<usize>,
    pub max_repeats: Option<usize>,
    #[serde(default)]
    pub proposal_scale: ProposalScale,
    #[serde(default)]
    pub resample: ResampleScheme,
}

/// Optional Kalman-inversion tuning beyond the shared fields.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EkiOptions {
    #[serde(default)]
    pub weight_rule: WeightRule,
    #[serde(default)]
    pub theta_space: ThetaSpace,
}

fn default_n() -> usize {
    1000
}
fn default_ess_target() -> f64 {
    0.5
}
fn default_m_noise() -> usize {
    1000
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub method: Method,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Target ESS as a fraction of `n`.
    #[serde(default = "default_ess_target")]
    pub ess_target: f64,
    #[serde(default = "default_m_noise")]
    pub m_noise: usize,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub predictive: bool,
    #[serde(default)]
    pub enkf_variant: EnkfVariant,
    #[serde(default)]
    pub smc: SmcOptions,
    #[serde(default)]
    pub eki: EkiOptions,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, method: Method, n: usize, seed: u64) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            model,
            method,
            n,
            ess_target: default_ess_target(),
            m_noise: default_m_noise(),
            seed,
            output_dir: None,
            predictive: true,
            enkf_variant: EnkfVariant::default(),
            smc: SmcOptions::default(),
            eki: EkiOptions::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.method.is_static() == self.model.is_state_space() {
            return Err(Error::Config(format!(
                "method {} cannot be used with model {}",
                self.method,
                self.model.kind()
            )));
        }
        if !(self.ess_target > 0.0 && self.ess_target < 1.0) {
            return Err(Error::Config(format!("ess_target must lie in (0, 1), got {}", self.ess_target)));
        }
        Ok(())
    }

    pub fn smc_config(&self) -> SmcConfig {
        let mut c = SmcConfig::new(self.n, self.seed);
        c.ess_target_fraction = self.ess_target;
        if let Some(v) = self.smc.c {
            c.c = v;
        }
        if let Some(v) = self.smc.s1 {
            c.s1 = v;
        }
        if let Some(v) = self.smc.max_repeats {
            c.max_repeats = v;
        }
        c.proposal_scale = self.smc.proposal_scale;
        c.resample = self.smc.resample;
        c
    }

    pub fn eki_config(&self) -> EkiConfig {
        let mut c = EkiConfig::new(self.n, self.seed);
        c.ess_target_fraction = self.ess_target;
        c.m_noise = self.m_noise;
        c.weight_rule = self.eki.weight_rule;
        c.theta_space = self.eki.theta_space;
        c
    }
}
