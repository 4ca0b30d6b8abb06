use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Ensemble;
use crate::error::{Error, Result};

const NORMALIZED_TOL: f64 = 1e-9;

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Wraps already-normalized weights, checking the sum.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::NonFinite("weights"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::Unnormalized { sum });
        }
        Ok(Self(w))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn ess(&self) -> f64 {
        1.0 / self.0.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Effective sample size `1 / Σ wₙ²` of normalized weights.
pub fn ess(w: &[f64]) -> Result<f64> {
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > NORMALIZED_TOL {
        return Err(Error::Unnormalized { sum });
    }
    Ok(1.0 / w.iter().map(|v| v * v).sum::<f64>())
}

/// `log Σ exp(xᵢ)`, `-inf` when every entry is `-inf`.
pub fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn normalize_log_weights(logw: &[f64]) -> Result<WeightVector> {
    if logw.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::NonFinite("log weights"));
    }
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(Error::ZeroWeights);
    }
    let unnorm: Vec<f64> = logw.iter().map(|v| (v - m).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    Ok(WeightVector(unnorm.into_iter().map(|v| v / total).collect()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleScheme {
    #[default]
    Systematic,
    Multinomial,
}

/// Indices chosen by systematic resampling with one uniform draw.
pub fn systematic_indices<R: Rng + ?Sized>(w: &WeightVector, rng: &mut R) -> Vec<usize> {
    let u: f64 = rng.random();
    systematic_from_offset(w, u, w.len())
}

/// Systematic selection of `count` indices from stratum offset `u ∈ [0, 1)`.
pub(crate) fn systematic_from_offset(w: &[f64], u: f64, count: usize) -> Vec<usize> {
    // rounding in the running sum must never land on a zero-weight tail
    let last = w.iter().rposition(|v| *v > 0.0).unwrap_or(w.len() - 1);
    let mut out = Vec::with_capacity(count);
    let mut cum = w[0];
    let mut i = 0;
    for k in 0..count {
        let pos = (u + k as f64) / count as f64;
        while pos >= cum && i < last {
            i += 1;
            cum += w[i];
        }
        out.push(i);
    }
    out
}

fn multinomial_indices<R: Rng + ?Sized>(w: &[f64], rng: &mut R) -> Vec<usize> {
    let n = w.len();
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for v in w {
        acc += v;
        cdf.push(acc);
    }
    (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            cdf.partition_point(|c| *c <= u).min(n - 1)
        })
        .collect()
}

pub fn resample_indices<R: Rng + ?Sized>(
    w: &WeightVector,
    scheme: ResampleScheme,
    rng: &mut R,
) -> Vec<usize> {
    match scheme {
        ResampleScheme::Systematic => systematic_indices(w, rng),
        ResampleScheme::Multinomial => multinomial_indices(w, rng),
    }
}

pub fn resample_systematic<R: Rng + ?Sized>(
    e: &Ensemble,
    w: &WeightVector,
    rng: &mut R,
) -> Result<Ensemble> {
    resample(e, w, ResampleScheme::Systematic, rng)
}

pub fn resample<R: Rng + ?Sized>(
    e: &Ensemble,
    w: &WeightVector,
    scheme: ResampleScheme,
    rng: &mut R,
) -> Result<Ensemble> {
    if w.len() != e.size() {
        return Err(Error::DimensionMismatch {
            what: "weight vector length",
            expected: e.size(),
            got: w.len(),
        });
    }
    Ok(e.select(&resample_indices(w, scheme, rng)))
}

pub fn weighted_mean(e: &Ensemble, w: &WeightVector) -> DVector<f64> {
    e.matrix() * DVector::from_column_slice(w)
}

/// Weighted covariance normalized by Σw (= 1); biased, as used for filter summaries.
pub fn weighted_cov(e: &Ensemble, w: &WeightVector) -> DMatrix<f64> {
    let mean = weighted_mean(e, w);
    let d = e.dim();
    let mut c = DMatrix::zeros(d, d);
    for (n, col) in e.matrix().column_iter().enumerate() {
        let dev = col - &mean;
        c += w[n] * &dev * dev.transpose();
    }
    c
}
