use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::io::{samples_to_csv, to_json_pretty, write_atomic};
use super::predictive::{posterior_predictive, Predictive};
use crate::eki::cw_ieki_run;
use crate::error::{Error, Result};
use crate::filters::{bootstrap_pf, enkf, kalman_filter, FilterOutput};
use crate::report::{Method, RunResult, SCHEMA_VERSION};
use crate::streams::Streams;
use crate::tempersmc::smc_run;

pub const SAMPLES_FILE: &str = "samples.csv";
pub const REPORT_FILE: &str = "report.json";
pub const PREDICTIVE_FILE: &str = "predictive.csv";
pub const FILTER_FILE: &str = "filter.csv";

/// Summary written for the state-space methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterReport {
    pub schema_version: u32,
    pub method: Method,
    pub seed: u64,
    pub n: usize,
    pub steps: usize,
    pub loglik: Option<f64>,
    /// Time-averaged squared error of the filter mean against the simulated truth.
    pub mse_vs_truth: f64,
    pub min_ess: Option<f64>,
}

#[derive(Debug)]
pub struct FilterRun {
    pub report: FilterReport,
    pub output: FilterOutput,
    pub truth: Vec<DVector<f64>>,
}

#[derive(Debug)]
pub enum ExperimentOutput {
    Static {
        result: RunResult,
        predictive: Option<Predictive>,
    },
    Filter(FilterRun),
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if cfg.method.is_static() {
        let model = cfg.model.build_static()?;
        let mut result = match cfg.method {
            Method::Smc => smc_run(&model, &cfg.smc_config())?,
            Method::Ieki if model.dim_phi() > 0 => {
                return Err(Error::Config(format!(
                    "ieki needs a model without noise parameters; {} has {} (use cw-ieki)",
                    cfg.model.kind(),
                    model.dim_phi()
                )))
            }
            _ => cw_ieki_run(&model, &cfg.eki_config())?,
        };
        let predictive = if cfg.predictive {
            let p = posterior_predictive(&model, &result.samples, &Streams::new(cfg.seed))?;
            result.report.predictive_g_evals = p.g_evals;
            Some(p)
        } else {
            None
        };
        result.report.samples_file = Some(SAMPLES_FILE.to_string());
        return Ok(ExperimentOutput::Static { result, predictive });
    }

    let (ssm, spec) = cfg.model.build_lgssm()?;
    let (truth, ys) = ssm.simulate(spec.steps, &mut Streams::new(spec.data_seed).rng(&[0]));
    let streams = Streams::new(cfg.seed);
    let output = match cfg.method {
        Method::Kalman => kalman_filter(&ssm, &ys)?,
        Method::Enkf => enkf(&ssm, &ys, cfg.n, cfg.enkf_variant, &streams)?.filter,
        Method::Pf => bootstrap_pf(&ssm, &ys, cfg.n, &streams)?,
        _ => unreachable!("static methods handled above"),
    };
    let mse = if truth.is_empty() {
        0.0
    } else {
        output
            .means
            .iter()
            .zip(&truth)
            .map(|(m, x)| (m - x).norm_squared())
            .sum::<f64>()
            / truth.len() as f64
    };
    let report = FilterReport {
        schema_version: SCHEMA_VERSION,
        method: cfg.method,
        seed: cfg.seed,
        n: if cfg.method == Method::Kalman { 0 } else { cfg.n },
        steps: spec.steps,
        loglik: output.loglik,
        mse_vs_truth: mse,
        min_ess: output.ess.iter().copied().reduce(f64::min),
    };
    Ok(ExperimentOutput::Filter(FilterRun { report, output, truth }))
}

fn filter_csv(run: &FilterRun) -> Result<Vec<u8>> {
    let d = run.truth.first().map(DVector::len).unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("mean{i}")));
    header.extend((1..=d).map(|i| format!("var{i}")));
    header.extend((1..=d).map(|i| format!("truth{i}")));
    w.write_record(&header)?;
    for (t, ((m, c), x)) in run.output.means.iter().zip(&run.output.covs).zip(&run.truth).enumerate() {
        let mut rec = vec![(t + 1).to_string()];
        rec.extend(m.iter().map(f64::to_string));
        rec.extend(c.diagonal().iter().map(f64::to_string));
        rec.extend(x.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes the run artifacts into `dir` and returns the paths written.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let p = dir.join(name);
        write_atomic(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    match out {
        ExperimentOutput::Static { result, predictive } => {
            put(SAMPLES_FILE, &samples_to_csv(&result.report.param_names, &result.samples)?)?;
            if let Some(p) = predictive {
                put(PREDICTIVE_FILE, &p.to_csv()?)?;
            }
            put(REPORT_FILE, to_json_pretty(&result.report)?.as_bytes())?;
        }
        ExperimentOutput::Filter(run) => {
            put(FILTER_FILE, &filter_csv(run)?)?;
            put(REPORT_FILE, to_json_pretty(&run.report)?.as_bytes())?;
        }
    }
    Ok(written)
}
