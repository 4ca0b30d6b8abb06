use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `m = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Factorizes a symmetric matrix; only the lower triangle is read.
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        if m.ncols() != d {
            return Err(Error::DimensionMismatch {
                what: "square matrix columns",
                expected: d,
                got: m.ncols(),
            });
        }
        let mut l = DMatrix::<f64>::zeros(d, d);
        for j in 0..d {
            let mut diag = m[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: diag,
                });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..d {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// log det m = 2 Σ log Lᵢᵢ
    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// Solves `L z = b` in place.
    pub fn forward_solve(&self, b: &mut DVector<f64>) {
        let d = self.dim();
        for i in 0..d {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    fn backward_solve(&self, b: &mut DVector<f64>) {
        let d = self.dim();
        for i in (0..d).rev() {
            let mut s = b[i];
            for k in (i + 1)..d {
                s -= self.l[(k, i)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.forward_solve(&mut x);
        self.backward_solve(&mut x);
        x
    }

    pub fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = rhs.clone();
        for mut col in out.column_iter_mut() {
            let x = self.solve_vec(&col.clone_owned());
            col.copy_from(&x);
        }
        out
    }

    /// `bᵀ m⁻¹ b`
    pub fn quad_form(&self, b: &DVector<f64>) -> f64 {
        let mut z = b.clone();
        self.forward_solve(&mut z);
        z.norm_squared()
    }

    /// `L z`, used to colour standard-normal draws.
    pub fn mul_lower(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.l * z
    }
}

/// Solves `m X = rhs` for symmetric positive definite `m`.
pub fn solve_spd(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if rhs.nrows() != m.nrows() {
        return Err(Error::DimensionMismatch {
            what: "right-hand side rows",
            expected: m.nrows(),
            got: rhs.nrows(),
        });
    }
    Ok(Cholesky::new(m)?.solve(rhs))
}

/// Factorizes `m`, retrying once with `1e-8 * trace(m) / d` added to the
/// diagonal if the first attempt fails.
pub fn factor_with_jitter(m: &DMatrix<f64>) -> Result<Cholesky> {
    match Cholesky::new(m) {
        Ok(c) => Ok(c),
        Err(Error::NotPositiveDefinite { .. }) => {
            let d = m.nrows().max(1);
            let jitter = 1e-8 * m.trace().abs() / d as f64;
            let mut shifted = m.clone();
            for i in 0..m.nrows() {
                shifted[(i, i)] += jitter;
            }
            Cholesky::new(&shifted)
        }
        Err(e) => Err(e),
    }
}

/// Factor of a random-walk proposal covariance `scale * cov`.
///
/// Rank-deficient inputs (duplicated particles after resampling) get
/// `1e-10 * trace / d` added to the diagonal; a zero matrix falls back to an
/// absolute `1e-10` so the proposal stays proper.
pub fn proposal_factor(cov: &DMatrix<f64>, scale: f64) -> Result<Cholesky> {
    let scaled = cov * scale;
    if let Ok(c) = Cholesky::new(&scaled) {
        return Ok(c);
    }
    let d = scaled.nrows().max(1) as f64;
    let trace = scaled.trace();
    let jitter = if trace > 0.0 && trace.is_finite() {
        1e-10 * trace / d
    } else {
        1e-10
    };
    let mut shifted = scaled;
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += jitter;
    }
    Cholesky::new(&shifted)
}

/// [`solve_spd`] with a single jitter retry.
pub fn solve_spd_jitter(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if rhs.nrows() != m.nrows() {
        return Err(Error::DimensionMismatch {
            what: "right-hand side rows",
            expected: m.nrows(),
            got: rhs.nrows(),
        });
    }
    Ok(factor_with_jitter(m)?.solve(rhs))
}
