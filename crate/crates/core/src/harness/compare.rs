use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ModelSpec};
use super::run::{run_experiment, ExperimentOutput};
use crate::error::{Error, Result};
use crate::models::{make_scalar_sigma_model, LinearGaussian};
use crate::report::{Method, SCHEMA_VERSION};

/// Simpson nodes per axis for the scalar-σ reference posterior.
pub const ORACLE_NODES: usize = 801;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub method: Method,
    pub seed: u64,
    pub n: usize,
    pub ess_target: f64,
    pub iterations: usize,
    pub g_evals: u64,
    /// Total MCMC sweeps over all iterations (φ-only for CW-IEKI).
    pub repeats: usize,
    /// Baseline `g_evals` over this row's, to two decimals.
    pub speedup: f64,
    pub posterior_mean: Vec<f64>,
    /// Per-parameter `|mean − baseline mean|` in units of the baseline sd.
    pub discrepancy_vs_baseline: Vec<f64>,
    /// Per-parameter `|mean − reference mean|` in units of the reference sd.
    pub discrepancy_vs_reference: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub param_names: Vec<String>,
    /// Index of the row used as the cost and accuracy baseline (the first SMC
    /// row, or the first row when no SMC run is present).
    pub baseline: usize,
    pub reference_mean: Option<Vec<f64>>,
    pub reference_sd: Option<Vec<f64>>,
    pub rows: Vec<CompareRow>,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn mean_sd(samples: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let s = samples.ncols() as f64;
    samples
        .row_iter()
        .map(|r| {
            let m = r.mean();
            let v = if s > 1.0 { r.variance() * s / (s - 1.0) } else { 0.0 };
            (m, v.sqrt())
        })
        .unzip()
}

fn scaled_gap(a: &[f64], b: &[f64], sd: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(sd)
        .map(|((x, y), s)| if *s > 0.0 { (x - y).abs() / s } else { (x - y).abs() })
        .collect()
}

/// Reference posterior (mean, sd) where one is available in closed form or by quadrature.
pub fn reference_posterior(model: &ModelSpec) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    Ok(match model {
        ModelSpec::ScalarSigma(spec) => {
            let q = make_scalar_sigma_model(spec)?.quadrature(ORACLE_NODES);
            Some((vec![q.theta_mean, q.sigma_mean], vec![q.theta_sd, q.sigma_sd]))
        }
        ModelSpec::LinearGaussian(_) => {
            let lg: LinearGaussian = model.build_linear_gaussian()?;
            let sd = lg.posterior_cov.diagonal().map(f64::sqrt);
            Some((lg.posterior_mean.as_slice().to_vec(), sd.as_slice().to_vec()))
        }
        _ => None,
    })
}

/// Runs every configuration on the shared model and tabulates cost and accuracy.
pub fn compare(configs: &[ExperimentConfig]) -> Result<CompareReport> {
    let first = configs
        .first()
        .ok_or_else(|| Error::Config("compare needs at least one configuration".into()))?;
    if let Some((i, c)) = configs.iter().enumerate().find(|(_, c)| c.model != first.model) {
        return Err(Error::Config(format!(
            "configuration {} uses model {} but configuration 1 uses {}; compare needs a shared model",
            i + 1,
            c.model.kind(),
            first.model.kind()
        )));
    }
    if let Some(c) = configs.iter().find(|c| !c.method.is_static()) {
        return Err(Error::Config(format!("compare supports smc, ieki and cw-ieki, not {}", c.method)));
    }

    let mut runs = Vec::with_capacity(configs.len());
    for cfg in configs {
        let mut cfg = cfg.clone();
        cfg.predictive = false;
        match run_experiment(&cfg)? {
            ExperimentOutput::Static { result, .. } => runs.push(result),
            ExperimentOutput::Filter(_) => unreachable!("static methods only"),
        }
    }
    let baseline = configs.iter().position(|c| c.method == Method::Smc).unwrap_or(0);
    let (base_mean, base_sd) = mean_sd(&runs[baseline].samples);
    let base_cost = runs[baseline].report.g_evals as f64;
    let reference = reference_posterior(&first.model)?;

    let rows = runs
        .iter()
        .map(|r| {
            let (mean, _) = mean_sd(&r.samples);
            CompareRow {
                method: r.report.method,
                seed: r.report.seed,
                n: r.report.n,
                ess_target: r.report.ess_target,
                iterations: r.report.iterations(),
                g_evals: r.report.g_evals,
                repeats: r.report.repeats.iter().sum(),
                speedup: round2(base_cost / r.report.g_evals as f64),
                discrepancy_vs_baseline: scaled_gap(&mean, &base_mean, &base_sd),
                discrepancy_vs_reference: reference.as_ref().map(|(m, s)| scaled_gap(&mean, m, s)),
                posterior_mean: mean,
            }
        })
        .collect();
    Ok(CompareReport {
        schema_version: SCHEMA_VERSION,
        model: first.model.clone(),
        param_names: runs[0].report.param_names.clone(),
        baseline,
        reference_mean: reference.as_ref().map(|r| r.0.clone()),
        reference_sd: reference.map(|r| r.1),
        rows,
    })
}

impl CompareReport {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["method", "seed", "n", "ess_target", "iterations", "g_evals", "repeats", "speedup"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(self.param_names.iter().map(|p| format!("mean_{p}")));
        header.extend(self.param_names.iter().map(|p| format!("gap_baseline_{p}")));
        if self.reference_mean.is_some() {
            header.extend(self.param_names.iter().map(|p| format!("gap_reference_{p}")));
        }
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.method.to_string(),
                r.seed.to_string(),
                r.n.to_string(),
                r.ess_target.to_string(),
                r.iterations.to_string(),
                r.g_evals.to_string(),
                r.repeats.to_string(),
                format!("{:.2}", r.speedup),
            ];
            rec.extend(r.posterior_mean.iter().map(f64::to_string));
            rec.extend(r.discrepancy_vs_baseline.iter().map(f64::to_string));
            if let Some(g) = &r.discrepancy_vs_reference {
                rec.extend(g.iter().map(f64::to_string));
            }
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}
