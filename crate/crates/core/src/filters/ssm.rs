use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::models::{CovFactor, Covariance};
use crate::stats::Cholesky;
use crate::streams::StreamRng;

/// A state-space model that can be simulated and whose observation density
/// can be evaluated.
pub trait Ssm: Sync {
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;
    fn init_sample(&self, rng: &mut StreamRng) -> DVector<f64>;
    fn transition_sample(&self, x: &DVector<f64>, rng: &mut StreamRng) -> DVector<f64>;
    fn obs_logpdf(&self, y: &DVector<f64>, x: &DVector<f64>) -> f64;
    fn obs_sample(&self, x: &DVector<f64>, rng: &mut StreamRng) -> DVector<f64>;

    /// Mean of the observation density, when it is Gaussian.
    fn obs_mean(&self, _x: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }

    /// Covariance of the Gaussian observation density.
    fn obs_cov(&self) -> Option<&Covariance> {
        None
    }
}

/// Square root `L` with `L Lᵀ = m` for a symmetric PSD matrix.
fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Ok(c) = Cholesky::new(m) {
        return Ok(c.factor().clone());
    }
    let eig = SymmetricEigen::new(0.5 * (m + m.transpose()));
    let scale = eig.eigenvalues.amax().max(1.0);
    if let Some(i) = eig.eigenvalues.iter().position(|&l| l < -1e-12 * scale) {
        return Err(Error::NotPositiveDefinite {
            pivot: i,
            value: eig.eigenvalues[i],
        });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

fn gaussian_draw(mean: DVector<f64>, sqrt: &DMatrix<f64>, rng: &mut StreamRng) -> DVector<f64> {
    let z = DVector::from_fn(sqrt.ncols(), |_, _| StandardNormal.sample(rng));
    mean + sqrt * z
}

/// Linear-Gaussian state-space model
/// `x_t = F x_{t-1} + N(0, Q)`, `y_t = H x_t + N(0, R)`, `x_0 ~ N(x0_mean, C0)`.
///
/// `Q` may be singular (including zero, for static states).
#[derive(Debug, Clone)]
pub struct Lgssm {
    pub f: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub x0_mean: DVector<f64>,
    pub c0: DMatrix<f64>,
    q_sqrt: DMatrix<f64>,
    c0_sqrt: DMatrix<f64>,
    r_cov: Covariance,
    r_factor: CovFactor,
}

impl Lgssm {
    pub fn new(
        f: DMatrix<f64>,
        q: DMatrix<f64>,
        h: DMatrix<f64>,
        r: DMatrix<f64>,
        x0_mean: DVector<f64>,
        c0: DMatrix<f64>,
    ) -> Result<Self> {
        let dx = x0_mean.len();
        let dy = h.nrows();
        let checks = [
            ("F shape", f.shape() == (dx, dx), f.nrows()),
            ("Q shape", q.shape() == (dx, dx), q.nrows()),
            ("H columns", h.ncols() == dx, h.ncols()),
            ("C0 shape", c0.shape() == (dx, dx), c0.nrows()),
        ];
        for (what, ok, got) in checks {
            if !ok {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: dx,
                    got,
                });
            }
        }
        if r.shape() != (dy, dy) {
            return Err(Error::DimensionMismatch {
                what: "R shape",
                expected: dy,
                got: r.nrows(),
            });
        }
        let q_sqrt = psd_sqrt(&q)?;
        let c0_sqrt = Cholesky::new(&c0)?.factor().clone();
        let r_cov = Covariance::Dense(r.clone());
        let r_factor = r_cov.factor()?;
        Ok(Self {
            f,
            q,
            h,
            r,
            x0_mean,
            c0,
            q_sqrt,
            c0_sqrt,
            r_cov,
            r_factor,
        })
    }

    /// Simulates states `x_1..x_T` and observations `y_1..y_T`.
    pub fn simulate(&self, steps: usize, rng: &mut StreamRng) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
        let mut x = self.init_sample(rng);
        let mut xs = Vec::with_capacity(steps);
        let mut ys = Vec::with_capacity(steps);
        for _ in 0..steps {
            x = self.transition_sample(&x, rng);
            ys.push(self.obs_sample(&x, rng));
            xs.push(x.clone());
        }
        (xs, ys)
    }
}

impl Ssm for Lgssm {
    fn dim_x(&self) -> usize {
        self.x0_mean.len()
    }

    fn dim_y(&self) -> usize {
        self.h.nrows()
    }

    fn init_sample(&self, rng: &mut StreamRng) -> DVector<f64> {
        gaussian_draw(self.x0_mean.clone(), &self.c0_sqrt, rng)
    }

    fn transition_sample(&self, x: &DVector<f64>, rng: &mut StreamRng) -> DVector<f64> {
        gaussian_draw(&self.f * x, &self.q_sqrt, rng)
    }

    fn obs_logpdf(&self, y: &DVector<f64>, x: &DVector<f64>) -> f64 {
        self.r_factor.loglik(y, &(&self.h * x))
    }

    fn obs_sample(&self, x: &DVector<f64>, rng: &mut StreamRng) -> DVector<f64> {
        &self.h * x + self.r_factor.sample_noise(rng)
    }

    fn obs_mean(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        Some(&self.h * x)
    }

    fn obs_cov(&self) -> Option<&Covariance> {
        Some(&self.r_cov)
    }
}
