//! Coordinatewise reparameterizations used for unconstrained updates and
//! sensitivity analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative inward shift applied to values sitting exactly on a logit bound.
pub const BOUND_NUDGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoordTransform {
    Identity,
    Log,
    /// `logit((x − lower) / (upper − lower))`.
    Logit { lower: f64, upper: f64 },
}

impl CoordTransform {
    pub fn name(&self) -> &'static str {
        match self {
            CoordTransform::Identity => "identity",
            CoordTransform::Log => "log",
            CoordTransform::Logit { .. } => "logit",
        }
    }

    /// Maps `x` to the unconstrained scale. Values exactly on a logit bound are
    /// moved inward by `1e-12·(upper − lower)` with a warning; values outside
    /// the domain are an error.
    pub fn forward(&self, x: f64, sample: usize, coord: usize) -> Result<f64> {
        let out_of_domain = || Error::OutOfDomain {
            sample,
            coord,
            value: x,
            transform: self.name(),
        };
        match *self {
            CoordTransform::Identity => Ok(x),
            CoordTransform::Log => {
                if x > 0.0 && x.is_finite() {
                    Ok(x.ln())
                } else {
                    Err(out_of_domain())
                }
            }
            CoordTransform::Logit { lower, upper } => {
                if !(x >= lower && x <= upper) {
                    return Err(out_of_domain());
                }
                let width = upper - lower;
                let mut u = (x - lower) / width;
                if u <= 0.0 || u >= 1.0 {
                    log::warn!("sample {sample} coordinate {coord} lies on a bound ({x}); nudged inward");
                    u = u.clamp(BOUND_NUDGE, 1.0 - BOUND_NUDGE);
                }
                Ok((u / (1.0 - u)).ln())
            }
        }
    }

    pub fn inverse(&self, z: f64) -> f64 {
        match *self {
            CoordTransform::Identity => z,
            CoordTransform::Log => z.exp(),
            CoordTransform::Logit { lower, upper } => {
                let u = if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                };
                lower + (upper - lower) * u
            }
        }
    }
}
