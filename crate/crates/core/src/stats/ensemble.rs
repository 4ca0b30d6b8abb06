use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A `d x N` block of particles, one particle per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble(DMatrix<f64>);

impl Ensemble {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ensemble"));
        }
        Ok(Self(data))
    }

    pub fn from_columns(columns: &[DVector<f64>]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::EmptyEnsemble);
        };
        let d = first.len();
        if let Some(bad) = columns.iter().find(|c| c.len() != d) {
            return Err(Error::DimensionMismatch {
                what: "ensemble column",
                expected: d,
                got: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(d, columns.len(), |i, j| columns[j][i]))
    }

    /// Variable dimension `d`.
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Ensemble size `N`.
    pub fn size(&self) -> usize {
        self.0.ncols()
    }

    pub fn column(&self, n: usize) -> DVector<f64> {
        self.0.column(n).into_owned()
    }

    pub fn columns(&self) -> Vec<DVector<f64>> {
        (0..self.size()).map(|n| self.column(n)).collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Columns selected by `indices`, in order (duplicates allowed).
    pub fn select(&self, indices: &[usize]) -> Self {
        Self(self.0.select_columns(indices))
    }

    /// Row-wise concatenation `[self; other]`.
    pub fn stack(&self, other: &Ensemble) -> Result<Self> {
        if self.size() != other.size() {
            return Err(Error::DimensionMismatch {
                what: "stacked ensemble size",
                expected: self.size(),
                got: other.size(),
            });
        }
        let (d1, d2, n) = (self.dim(), other.dim(), self.size());
        Ok(Self(DMatrix::from_fn(d1 + d2, n, |i, j| {
            if i < d1 {
                self.0[(i, j)]
            } else {
                other.0[(i - d1, j)]
            }
        })))
    }

    /// Rows `start..start+len` as their own ensemble.
    pub fn rows(&self, start: usize, len: usize) -> Self {
        Self(self.0.rows(start, len).into_owned())
    }
}

pub fn sample_mean(e: &Ensemble) -> Result<DVector<f64>> {
    let n = e.size();
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    Ok(e.0.column_sum() / n as f64)
}

fn anomalies(e: &Ensemble) -> Result<DMatrix<f64>> {
    let mean = sample_mean(e)?;
    let mut a = e.0.clone();
    for mut col in a.column_iter_mut() {
        col -= &mean;
    }
    Ok(a)
}

/// Unbiased (`N - 1`) sample covariance.
pub fn sample_cov(e: &Ensemble) -> Result<DMatrix<f64>> {
    let n = e.size();
    if n < 2 {
        return Err(Error::TooFewMembers { needed: 2, got: n });
    }
    let a = anomalies(e)?;
    let mut c = &a * a.transpose() / (n - 1) as f64;
    // exact symmetry regardless of summation order
    for i in 0..c.nrows() {
        for j in 0..i {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

/// Unbiased sample cross covariance, `d_a x d_b`.
pub fn sample_cross_cov(a: &Ensemble, b: &Ensemble) -> Result<DMatrix<f64>> {
    if a.size() != b.size() {
        return Err(Error::DimensionMismatch {
            what: "cross covariance ensemble size",
            expected: a.size(),
            got: b.size(),
        });
    }
    let n = a.size();
    if n < 2 {
        return Err(Error::TooFewMembers { needed: 2, got: n });
    }
    let da = anomalies(a)?;
    let db = anomalies(b)?;
    Ok(da * db.transpose() / (n - 1) as f64)
}
