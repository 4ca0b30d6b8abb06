//! Sensitivity of posterior samples: inverse sample covariance on a log or
//! logit scale, its eigen-decomposition, and eigenparameter projections.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{sample_cov, solve_spd, Ensemble};
use crate::transform::CoordTransform;

/// Transform applied to every coordinate before computing the sensitivity.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleTransform {
    Log,
    /// Rescale each coordinate to [0, 1] with its bounds, then logit.
    Logit(Vec<(f64, f64)>),
}

impl SampleTransform {
    fn coord(&self, j: usize) -> CoordTransform {
        match self {
            SampleTransform::Log => CoordTransform::Log,
            SampleTransform::Logit(b) => CoordTransform::Logit {
                lower: b[j].0,
                upper: b[j].1,
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SampleTransform::Log => "log",
            SampleTransform::Logit(_) => "logit",
        }
    }

    /// Transformed copy of `samples` (d × S).
    pub fn apply(&self, samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if let SampleTransform::Logit(b) = self {
            if b.len() != samples.nrows() {
                return Err(Error::DimensionMismatch {
                    what: "logit bounds",
                    expected: samples.nrows(),
                    got: b.len(),
                });
            }
        }
        let mut out = samples.clone();
        for s in 0..samples.ncols() {
            for j in 0..samples.nrows() {
                out[(j, s)] = self.coord(j).forward(samples[(j, s)], s, j)?;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct SensitivityResult {
    pub matrix: DMatrix<f64>,
    /// Descending.
    pub eigenvalues: DVector<f64>,
    /// Orthonormal columns matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub transform: SampleTransform,
}

/// Flips `v` so its largest-magnitude entry is positive (ties: lowest index).
fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

pub fn sensitivity_matrix(samples: &DMatrix<f64>, transform: SampleTransform) -> Result<SensitivityResult> {
    let (d, s) = samples.shape();
    if s < d + 1 {
        return Err(Error::TooFewMembers { needed: d + 1, got: s });
    }
    let z = Ensemble::new(transform.apply(samples)?)?;
    let cov = sample_cov(&z)?;
    let matrix = solve_spd(&cov, &DMatrix::identity(d, d)).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::SingularCovariance(
            "transformed sample covariance is singular; add jitter or drop parameters".into(),
        ),
        other => other,
    })?;
    let matrix = 0.5 * (&matrix + matrix.transpose());
    let eig = SymmetricEigen::new(matrix.clone());
    let mut pairs: Vec<(f64, DVector<f64>)> = (0..d)
        .map(|k| {
            let mut v = eig.eigenvectors.column(k).into_owned();
            fix_sign(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    // ties fall back to the first component, descending
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| b.1[0].total_cmp(&a.1[0])));
    let eigenvalues = DVector::from_iterator(d, pairs.iter().map(|p| p.0));
    let cols: Vec<DVector<f64>> = pairs.into_iter().map(|p| p.1).collect();
    Ok(SensitivityResult {
        matrix,
        eigenvalues,
        eigenvectors: DMatrix::from_columns(&cols),
        transform,
    })
}

/// `α_k(s) = Σ_j (v_k)_j T(θ_j(s))` for every sample column.
pub fn eigenparameter_samples(samples: &DMatrix<f64>, v: &DVector<f64>, transform: &SampleTransform) -> Result<Vec<f64>> {
    if v.len() != samples.nrows() {
        return Err(Error::DimensionMismatch {
            what: "eigenvector length",
            expected: samples.nrows(),
            got: v.len(),
        });
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!("eigenvector must have unit norm, got {norm}")));
    }
    let z = transform.apply(samples)?;
    Ok(z.column_iter().map(|c| c.dot(v)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenvectorRow {
    pub k: usize,
    pub eigenvalue: f64,
    /// `λ_k / λ_1`.
    pub ratio: f64,
    pub label: String,
    /// `|(v_k)_j|` per parameter.
    pub contributions: Vec<f64>,
}

pub fn eigenvector_report(result: &SensitivityResult, top_k: usize) -> Result<Vec<EigenvectorRow>> {
    let d = result.eigenvalues.len();
    if top_k == 0 || top_k > d {
        return Err(Error::InvalidParameter(format!("top_k must lie in [1, {d}], got {top_k}")));
    }
    let l1 = result.eigenvalues[0];
    Ok((0..top_k)
        .map(|k| {
            let ratio = result.eigenvalues[k] / l1;
            EigenvectorRow {
                k: k + 1,
                eigenvalue: result.eigenvalues[k],
                ratio,
                label: format!("v{}({:.3})", k + 1, ratio),
                contributions: result.eigenvectors.column(k).iter().map(|v| v.abs()).collect(),
            }
        })
        .collect())
}
