use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::stats::Cholesky;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile.
pub fn std_normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// One independent prior coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Marginal {
    Uniform {
        lower: f64,
        upper: f64,
    },
    TruncatedNormal {
        mean: f64,
        sd: f64,
        lower: f64,
        upper: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
}

impl Marginal {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Uniform { lower, upper } => lower < upper,
            Marginal::TruncatedNormal {
                sd, lower, upper, ..
            } => lower < upper && sd > 0.0,
            Marginal::Normal { sd, .. } => sd > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid prior {self:?}")))
        }
    }

    /// Support bounds, `None` for unbounded coordinates.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Marginal::Uniform { lower, upper } | Marginal::TruncatedNormal { lower, upper, .. } => {
                Some((lower, upper))
            }
            Marginal::Normal { .. } => None,
        }
    }

    /// Probability mass of the truncation window, computed in whichever tail
    /// keeps the subtraction well conditioned.
    fn truncation_mass(mean: f64, sd: f64, lower: f64, upper: f64) -> f64 {
        let a = (lower - mean) / sd;
        let b = (upper - mean) / sd;
        if a > 0.0 {
            std_normal_cdf(-a) - std_normal_cdf(-b)
        } else {
            std_normal_cdf(b) - std_normal_cdf(a)
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lower, upper } => {
                if x >= lower && x <= upper {
                    -(upper - lower).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Marginal::TruncatedNormal {
                mean,
                sd,
                lower,
                upper,
            } => {
                if x < lower || x > upper {
                    return f64::NEG_INFINITY;
                }
                let z = (x - mean) / sd;
                -0.5 * z * z - LN_SQRT_2PI - sd.ln()
                    - Self::truncation_mass(mean, sd, lower, upper).ln()
            }
            Marginal::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - LN_SQRT_2PI - sd.ln()
            }
        }
    }

    /// Draws one value; the truncated normal uses inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Uniform { lower, upper } => {
                let u: f64 = rng.random();
                (lower + u * (upper - lower)).clamp(lower, upper)
            }
            Marginal::TruncatedNormal {
                mean,
                sd,
                lower,
                upper,
            } => {
                let u: f64 = rng.random();
                let a = (lower - mean) / sd;
                let b = (upper - mean) / sd;
                // reflect so the window sits in the lower tail where Φ is accurate
                let (lo, hi, sign) = if a > 0.0 { (-b, -a, -1.0) } else { (a, b, 1.0) };
                let p_lo = std_normal_cdf(lo);
                let p_hi = std_normal_cdf(hi);
                let z = std_normal_quantile(p_lo + u * (p_hi - p_lo));
                (mean + sign * sd * z).clamp(lower, upper)
            }
            Marginal::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
        }
    }
}

/// Prior over a parameter vector.
#[derive(Debug, Clone)]
pub enum Prior {
    /// Independent coordinates.
    Independent(Vec<Marginal>),
    /// Joint multivariate normal.
    Gaussian {
        mean: DVector<f64>,
        cov: DMatrix<f64>,
        chol: Cholesky,
    },
}

impl Prior {
    pub fn independent(marginals: Vec<Marginal>) -> Result<Self> {
        for m in &marginals {
            m.validate()?;
        }
        Ok(Prior::Independent(marginals))
    }

    /// Prior with no coordinates (for models without noise parameters).
    pub fn empty() -> Self {
        Prior::Independent(Vec::new())
    }

    pub fn gaussian(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                what: "prior covariance",
                expected: mean.len(),
                got: cov.nrows(),
            });
        }
        let chol = Cholesky::new(&cov)?;
        Ok(Prior::Gaussian { mean, cov, chol })
    }

    pub fn dim(&self) -> usize {
        match self {
            Prior::Independent(m) => m.len(),
            Prior::Gaussian { mean, .. } => mean.len(),
        }
    }

    pub fn bounds(&self, i: usize) -> Option<(f64, f64)> {
        match self {
            Prior::Independent(m) => m.get(i).and_then(Marginal::bounds),
            Prior::Gaussian { .. } => None,
        }
    }

    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "prior argument",
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(match self {
            Prior::Independent(ms) => {
                let mut total = 0.0;
                for (m, &v) in ms.iter().zip(x) {
                    total += m.log_pdf(v);
                    if total == f64::NEG_INFINITY {
                        break;
                    }
                }
                total
            }
            Prior::Gaussian { mean, chol, .. } => {
                let dev = DVector::from_column_slice(x) - mean;
                let d = mean.len() as f64;
                -0.5 * (d * (2.0 * PI).ln() + chol.log_det() + chol.quad_form(&dev))
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        match self {
            Prior::Independent(ms) => DVector::from_iterator(ms.len(), ms.iter().map(|m| m.sample(rng))),
            Prior::Gaussian { mean, chol, .. } => {
                let z = DVector::from_fn(mean.len(), |_, _| StandardNormal.sample(rng));
                mean + chol.mul_lower(&z)
            }
        }
    }
}
