use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::StaticModel;
use crate::streams::{stage, Streams};

/// Linear-interpolation quantile of sorted data (Hyndman–Fan type 7).
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictiveBand {
    pub obs: usize,
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct Predictive {
    /// One simulated data set per posterior sample, `d_y × S`.
    pub draws: DMatrix<f64>,
    pub bands: Vec<PredictiveBand>,
    /// Forward calls spent here; kept apart from the inference cost.
    pub g_evals: u64,
}

/// Draws `y* ~ N(G(θ), Γ(θ, φ))` for every column `(θ, φ)` of `samples` and
/// summarizes each coordinate by its 2.5%, 50% and 97.5% quantiles.
pub fn posterior_predictive(model: &StaticModel, samples: &DMatrix<f64>, streams: &Streams) -> Result<Predictive> {
    let (dt, dp, dy) = (model.dim_theta(), model.dim_phi(), model.dim_y());
    if samples.nrows() != dt + dp {
        return Err(Error::DimensionMismatch {
            what: "sample dimension",
            expected: dt + dp,
            got: samples.nrows(),
        });
    }
    if samples.ncols() == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let streams = streams.fork(stage::PREDICT);
    let before = model.forward.evaluations();
    let cols: Vec<DVector<f64>> = (0..samples.ncols())
        .into_par_iter()
        .map(|s| {
            let col = samples.column(s);
            let theta = DVector::from_iterator(dt, col.rows(0, dt).iter().copied());
            let phi = DVector::from_iterator(dp, col.rows(dt, dp).iter().copied());
            let g = model.forward.evaluate(&theta);
            let f = model.gamma(&theta, &g, &phi).factor()?;
            Ok(g + f.sample_noise(&mut streams.rng(&[s as u64])))
        })
        .collect::<Result<_>>()?;
    let g_evals = model.forward.evaluations() - before;
    let draws = DMatrix::from_columns(&cols);

    let bands = (0..dy)
        .map(|k| {
            let mut row: Vec<f64> = draws.row(k).iter().copied().collect();
            row.sort_by(f64::total_cmp);
            PredictiveBand {
                obs: k,
                lower: quantile_type7(&row, 0.025),
                median: quantile_type7(&row, 0.5),
                upper: quantile_type7(&row, 0.975),
            }
        })
        .collect();
    Ok(Predictive { draws, bands, g_evals })
}

impl Predictive {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for b in &self.bands {
            w.serialize(b)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}
