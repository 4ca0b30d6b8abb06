use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::stats::Cholesky;

/// Observation noise covariance. Built-in models are all diagonal.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl Covariance {
    pub fn identity(d: usize) -> Self {
        Covariance::Diagonal(DVector::from_element(d, 1.0))
    }

    pub fn dim(&self) -> usize {
        match self {
            Covariance::Diagonal(v) => v.len(),
            Covariance::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Covariance::Diagonal(v) => DMatrix::from_diagonal(v),
            Covariance::Dense(m) => m.clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Covariance::Diagonal(v) => Covariance::Diagonal(v * factor),
            Covariance::Dense(m) => Covariance::Dense(m * factor),
        }
    }

    /// Adds this covariance onto `m` in place.
    pub fn add_to(&self, m: &mut DMatrix<f64>) {
        match self {
            Covariance::Diagonal(v) => {
                for i in 0..v.len() {
                    m[(i, i)] += v[i];
                }
            }
            Covariance::Dense(c) => *m += c,
        }
    }

    pub fn factor(&self) -> Result<CovFactor> {
        match self {
            Covariance::Diagonal(v) => {
                if let Some(pivot) = v.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(Error::NotPositiveDefinite {
                        pivot,
                        value: v[pivot],
                    });
                }
                Ok(CovFactor::Diagonal(v.map(f64::sqrt)))
            }
            Covariance::Dense(m) => Ok(CovFactor::Dense(Cholesky::new(m)?)),
        }
    }
}

impl From<DMatrix<f64>> for Covariance {
    fn from(m: DMatrix<f64>) -> Self {
        Covariance::Dense(m)
    }
}

/// Square-root factor of a [`Covariance`].
#[derive(Debug, Clone)]
pub enum CovFactor {
    Diagonal(DVector<f64>),
    Dense(Cholesky),
}

impl CovFactor {
    pub fn log_det(&self) -> f64 {
        match self {
            CovFactor::Diagonal(s) => 2.0 * s.iter().map(|v| v.ln()).sum::<f64>(),
            CovFactor::Dense(c) => c.log_det(),
        }
    }

    pub fn quad_form(&self, r: &DVector<f64>) -> f64 {
        match self {
            CovFactor::Diagonal(s) => r.iter().zip(s.iter()).map(|(a, b)| (a / b).powi(2)).sum(),
            CovFactor::Dense(c) => c.quad_form(r),
        }
    }

    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        match self {
            CovFactor::Diagonal(s) => s.map(|sd| {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            }),
            CovFactor::Dense(c) => {
                let z = DVector::from_fn(c.dim(), |_, _| StandardNormal.sample(rng));
                c.mul_lower(&z)
            }
        }
    }

    pub fn loglik(&self, y: &DVector<f64>, g: &DVector<f64>) -> f64 {
        let d = y.len() as f64;
        -0.5 * (d * (2.0 * PI).ln() + self.log_det() + self.quad_form(&(y - g)))
    }
}

/// `log N(y | g, gamma)` via a triangular factorization of `gamma`.
pub fn gaussian_loglik(y: &DVector<f64>, g: &DVector<f64>, gamma: &Covariance) -> Result<f64> {
    if g.len() != y.len() || gamma.dim() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "likelihood dimension",
            expected: y.len(),
            got: if g.len() != y.len() { g.len() } else { gamma.dim() },
        });
    }
    Ok(gamma.factor()?.loglik(y, g))
}
