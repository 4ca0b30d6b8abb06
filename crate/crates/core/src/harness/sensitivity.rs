use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sloppiness::{eigenparameter_samples, eigenvector_report, sensitivity_matrix, EigenvectorRow, SampleTransform};
use crate::report::SCHEMA_VERSION;

/// Bounds file: parameter name -> `[lower, upper]`. Its keys also select
/// which sample columns enter the analysis.
pub type BoundsFile = BTreeMap<String, (f64, f64)>;

pub fn load_bounds(path: &Path) -> Result<BoundsFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize)]
pub struct SloppinessSummary {
    pub schema_version: u32,
    pub transform: String,
    pub params: Vec<String>,
    pub samples: usize,
    pub eigenvalues: Vec<f64>,
    /// Row-major sensitivity matrix.
    pub matrix: Vec<Vec<f64>>,
    pub top: Vec<EigenvectorRow>,
}

#[derive(Debug, Clone)]
pub struct SloppinessOutput {
    pub summary: SloppinessSummary,
    /// `S × top_k` eigenparameter values.
    pub eigenparameters: DMatrix<f64>,
}

/// Selects columns, applies the transform and reports the leading `top_k`
/// eigendirections with their per-sample eigenparameters.
pub fn analyze(
    names: &[String],
    samples: &DMatrix<f64>,
    logit: bool,
    bounds: Option<&BoundsFile>,
    top_k: usize,
) -> Result<SloppinessOutput> {
    let selected: Vec<usize> = match bounds {
        Some(b) => {
            if let Some(missing) = b.keys().find(|k| !names.contains(k)) {
                return Err(Error::Config(format!(
                    "bounds name {missing:?} is not a sample column (columns: {})",
                    names.join(", ")
                )));
            }
            (0..names.len()).filter(|&i| b.contains_key(&names[i])).collect()
        }
        None if logit => return Err(Error::Config("the logit transform needs --bounds".into())),
        None => (0..names.len()).collect(),
    };
    let params: Vec<String> = selected.iter().map(|&i| names[i].clone()).collect();
    let sub = samples.select_rows(&selected);
    let transform = if logit {
        let b = bounds.expect("checked above");
        SampleTransform::Logit(params.iter().map(|p| b[p]).collect())
    } else {
        SampleTransform::Log
    };
    let result = sensitivity_matrix(&sub, transform)?;
    let top = eigenvector_report(&result, top_k)?;
    let cols: Vec<Vec<f64>> = (0..top_k)
        .map(|k| eigenparameter_samples(&sub, &result.eigenvectors.column(k).into_owned(), &result.transform))
        .collect::<Result<_>>()?;
    let s = sub.ncols();
    let eigenparameters = DMatrix::from_fn(s, top_k, |i, k| cols[k][i]);
    Ok(SloppinessOutput {
        summary: SloppinessSummary {
            schema_version: SCHEMA_VERSION,
            transform: result.transform.name().to_string(),
            samples: s,
            eigenvalues: result.eigenvalues.iter().copied().collect(),
            matrix: result.matrix.row_iter().map(|r| r.iter().copied().collect()).collect(),
            params,
            top,
        },
        eigenparameters,
    })
}

impl SloppinessOutput {
    /// One row per eigenvector: label, eigenvalue, ratio and `|v_k|` per parameter.
    pub fn eigenvectors_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["k", "label", "eigenvalue", "ratio"].iter().map(|s| s.to_string()).collect();
        header.extend(self.summary.params.iter().cloned());
        w.write_record(&header)?;
        for r in &self.summary.top {
            let mut rec = vec![r.k.to_string(), r.label.clone(), r.eigenvalue.to_string(), r.ratio.to_string()];
            rec.extend(r.contributions.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn eigenparameters_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record((1..=self.eigenparameters.ncols()).map(|k| format!("alpha{k}")))?;
        for row in self.eigenparameters.row_iter() {
            w.write_record(row.iter().map(f64::to_string))?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}
