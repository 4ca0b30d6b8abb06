//! Acceptance suite. Each criterion prints one PASS/FAIL line straight to
//! stdout (bypassing the test harness capture) and the test fails if any
//! criterion fails.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use ekinfer::eki::{cw_ieki_run, eki_measurement_update, perturbation_draws, EkiConfig, GammaSet};
use ekinfer::filters::{bootstrap_pf, enkf, kalman_filter, EnkfVariant, Lgssm};
use ekinfer::harness::{compare, run_experiment, ExperimentConfig, ExperimentOutput, ModelSpec, PredictiveBand};
use ekinfer::models::{
    make_scalar_sigma_model, scalar_conjugate, Covariance, MineralisationSpec, ScalarSigmaSpec, StaticModel,
};
use ekinfer::report::Method;
use ekinfer::sloppiness::{eigenparameter_samples, sensitivity_matrix, SampleTransform};
use ekinfer::stats::Ensemble;
use ekinfer::streams::{stage, Streams};
use ekinfer::tempersmc::{smc_run, SmcConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn report(k: usize, o: &Outcome, elapsed: Duration) {
    let line = format!(
        "\n{} criterion {k}: {} [{:.1}s]\n",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn prior_ensemble(model: &StaticModel, n: usize, streams: &Streams) -> (Ensemble, Ensemble) {
    let cols: Vec<DVector<f64>> = (0..n)
        .map(|i| model.sample_prior(&mut streams.rng(&[0, i as u64, stage::INIT])).0)
        .collect();
    let g: Vec<DVector<f64>> = cols.iter().map(|t| model.forward.evaluate(t)).collect();
    (Ensemble::from_columns(&cols).unwrap(), Ensemble::from_columns(&g).unwrap())
}

fn within_time(o: Outcome, start: Instant, limit: Duration) -> Outcome {
    let t = start.elapsed();
    if t > limit {
        outcome(false, format!("{} (runtime {:.1}s over {:.0}s)", o.detail, t.as_secs_f64(), limit.as_secs_f64()))
    } else {
        o
    }
}

/// One EKI update with h = 1 on the scalar conjugate model reproduces N(0.5, 0.5).
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let lg = scalar_conjugate();
    let n = 100_000;
    let streams = Streams::new(101);
    let (theta, g) = prior_ensemble(&lg.model, n, &streams);
    let z = perturbation_draws(&streams, 1, 1, n);
    let gammas = GammaSet::Shared(Covariance::Dense(lg.gamma0.clone()));
    let out = eki_measurement_update(&theta, &g, &lg.model.data, &gammas, 1.0, &z).unwrap();
    let (m, v) = mean_var(out.matrix().as_slice());
    let tol = 4.0 * (0.5f64.sqrt() / (n as f64).sqrt());
    let pass = (m - 0.5).abs() < tol && (v - 0.5).abs() < 0.05 * 0.5;
    within_time(
        outcome(pass, format!("single-update mean {m:.5} (tol {tol:.5}), variance {v:.5} (target 0.5 +/- 5%)")),
        start,
        Duration::from_secs(5),
    )
}

/// Adaptive IEKI on the same model: steps sum to one and the final moments
/// agree with the conjugate posterior for every one of 20 seeds.
fn criterion_2() -> Outcome {
    let start = Instant::now();
    let lg = scalar_conjugate();
    let n = 1000;
    let se_mean = (0.5 / n as f64).sqrt();
    let se_var = 0.5 * (2.0 / (n as f64 - 1.0)).sqrt();
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for seed in 0..20u64 {
        let out = cw_ieki_run(&lg.model, &EkiConfig::new(n, 1000 + seed)).unwrap();
        let steps: f64 = out.report.increments.iter().sum();
        let (m, v) = mean_var(out.samples.as_slice());
        let zm = (m - 0.5).abs() / se_mean;
        let zv = (v - 0.5).abs() / se_var;
        worst = (worst.0.max(zm), worst.1.max(zv), worst.2.max((steps - 1.0).abs()));
        if zm > 4.0 || zv > 4.0 || (steps - 1.0).abs() > 1e-12 || *out.report.alphas.last().unwrap() != 1.0 {
            failures.push(seed);
        }
    }
    within_time(
        outcome(
            failures.is_empty(),
            format!(
                "20 seeds, worst |mean err| {:.2} SE, worst |var err| {:.2} SE, worst |sum h - 1| {:.1e}, failing seeds {failures:?}",
                worst.0, worst.1, worst.2
            ),
        ),
        start,
        Duration::from_secs(30),
    )
}

/// SMC on the scalar-σ model agrees with the quadrature posterior.
fn criterion_3() -> Outcome {
    let start = Instant::now();
    let spec = ScalarSigmaSpec::default();
    let m = make_scalar_sigma_model(&spec).unwrap();
    let q = m.quadrature(801);
    let n = 1000;
    let se = [q.theta_sd / (n as f64).sqrt(), q.sigma_sd / (n as f64).sqrt()];
    let mut passes = 0;
    let mut zs = Vec::new();
    for seed in 0..10u64 {
        let model = make_scalar_sigma_model(&spec).unwrap().model;
        let out = smc_run(&model, &SmcConfig::new(n, 300 + seed)).unwrap();
        let mt = out.samples.row(0).mean();
        let ms = out.samples.row(1).mean();
        let z = [(mt - q.theta_mean).abs() / se[0], (ms - q.sigma_mean).abs() / se[1]];
        if z[0] < 5.0 && z[1] < 5.0 {
            passes += 1;
        }
        zs.push(format!("{:.1}/{:.1}", z[0], z[1]));
    }
    within_time(
        outcome(
            passes >= 9,
            format!("{passes}/10 seeds within 5 oracle SE (theta/sigma z: {})", zs.join(" ")),
        ),
        start,
        Duration::from_secs(120),
    )
}

fn predictive_bands(cfg: &ExperimentConfig) -> Vec<PredictiveBand> {
    match run_experiment(cfg).unwrap() {
        ExperimentOutput::Static { predictive, .. } => predictive.unwrap().bands,
        ExperimentOutput::Filter(_) => unreachable!(),
    }
}

/// Returns (pass, summary) for the width and median-coverage comparison.
fn compare_bands(cw: &[PredictiveBand], smc: &[PredictiveBand]) -> (bool, String) {
    let d = cw.len();
    let mut narrower = 0usize;
    let mut badly = 0usize;
    let mut covered = 0usize;
    let mut min_ratio = f64::INFINITY;
    for (a, b) in cw.iter().zip(smc) {
        let wa = a.upper - a.lower;
        let wb = b.upper - b.lower;
        min_ratio = min_ratio.min(wa / wb);
        if wa < wb {
            narrower += 1;
            if wa < 0.98 * wb {
                badly += 1;
            }
        }
        if a.median >= b.lower && a.median <= b.upper {
            covered += 1;
        }
    }
    let allowed = (0.05 * d as f64).floor() as usize;
    let pass = badly == 0 && narrower <= allowed && covered as f64 >= 0.9 * d as f64;
    (
        pass,
        format!(
            "{d} coords: {narrower} narrower (allowed {allowed}, {badly} by >2%), min width ratio {min_ratio:.3}, medians inside {covered}/{d}"
        ),
    )
}

/// CW-IEKI keeps predictive intervals at least as wide as SMC's.
fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for (name, model) in [
        ("scalar_sigma", ModelSpec::ScalarSigma(ScalarSigmaSpec::default())),
        ("mineralisation", ModelSpec::Mineralisation(MineralisationSpec::default())),
    ] {
        let cw = predictive_bands(&ExperimentConfig::new(model.clone(), Method::CwIeki, 1000, 41));
        let smc = predictive_bands(&ExperimentConfig::new(model, Method::Smc, 1000, 41));
        let (ok, msg) = compare_bands(&cw, &smc);
        pass &= ok;
        details.push(format!("{name}: {msg}"));
    }
    within_time(outcome(pass, details.join("; ")), start, Duration::from_secs(300))
}

/// Counter identities and the CW-IEKI/SMC speedup from one compare run.
fn criterion_5() -> Outcome {
    let model = ModelSpec::Mineralisation(MineralisationSpec::default());
    let cfgs = [
        ExperimentConfig::new(model.clone(), Method::CwIeki, 1000, 5),
        ExperimentConfig::new(model, Method::Smc, 1000, 5),
    ];
    let rep = compare(&cfgs).unwrap();
    let cw = &rep.rows[0];
    let smc = &rep.rows[1];
    let n = 1000u64;
    let cw_ok = cw.g_evals == (cw.iterations as u64 + 1) * n;
    let smc_ok = smc.g_evals == n + n * smc.repeats as u64;
    let speedup = cw.speedup;
    outcome(
        cw_ok && smc_ok && speedup >= 5.0,
        format!(
            "cw-ieki {} calls = (J+1)N with J={} [{}], smc {} calls = N + N*sum(M)={} [{}], speedup {speedup:.2}x",
            cw.g_evals,
            cw.iterations,
            if cw_ok { "ok" } else { "mismatch" },
            smc.g_evals,
            n + n * smc.repeats as u64,
            if smc_ok { "ok" } else { "mismatch" },
        ),
    )
}

fn test_lgssm() -> Lgssm {
    Lgssm::new(
        DMatrix::from_row_slice(2, 2, &[0.9, 0.2, -0.1, 0.8]),
        DMatrix::from_row_slice(2, 2, &[0.2, 0.05, 0.05, 0.1]),
        DMatrix::from_row_slice(1, 2, &[1.0, 0.5]),
        DMatrix::from_element(1, 1, 0.5),
        DVector::from_vec(vec![0.5, -0.5]),
        DMatrix::identity(2, 2),
    )
    .unwrap()
}

/// EnKF (both variants) and the bootstrap PF against exact Kalman recursions.
///
/// The SE of a filter mean is its sampling sd over independent replicate runs:
/// perturbed observations, weight degeneracy and resampling all inflate it
/// above the iid value `sqrt(P/N)`.
fn criterion_6() -> Outcome {
    let start = Instant::now();
    let m = test_lgssm();
    let (_, ys) = m.simulate(50, &mut Streams::new(606).rng(&[0]));
    let kf = kalman_filter(&m, &ys).unwrap();
    let exact = kf.loglik.unwrap();
    let n = 10_000usize;
    let reps = 20u64;

    // worst |mean − Kalman| over time and coordinates, in replicate SE
    let worst_z = |run: &dyn Fn(&Streams) -> Vec<DVector<f64>>| -> (f64, f64) {
        let test = run(&Streams::new(607));
        let replicates: Vec<Vec<DVector<f64>>> = (0..reps).map(|r| run(&Streams::new(6100 + r))).collect();
        let mut worst = 0.0f64;
        let mut worst_iid = 0.0f64;
        for t in 0..test.len() {
            for i in 0..2 {
                let vals: Vec<f64> = replicates.iter().map(|rep| rep[t][i]).collect();
                let (_, var) = mean_var(&vals);
                let err = (test[t][i] - kf.means[t][i]).abs();
                worst = worst.max(err / var.sqrt());
                worst_iid = worst_iid.max(err / (kf.covs[t][(i, i)] / n as f64).sqrt());
            }
        }
        (worst, worst_iid)
    };
    let z_po = worst_z(&|s| enkf(&m, &ys, n, EnkfVariant::PerturbedObs, s).unwrap().filter.means);
    let z_go = worst_z(&|s| enkf(&m, &ys, n, EnkfVariant::GaussianObs, s).unwrap().filter.means);
    let z_pf = worst_z(&|s| bootstrap_pf(&m, &ys, n, s).unwrap().means);

    let lls: Vec<f64> = (0..50u64)
        .map(|r| bootstrap_pf(&m, &ys, n, &Streams::new(7000 + r)).unwrap().loglik.unwrap())
        .collect();
    let (ll_mean, ll_var) = mean_var(&lls);
    let ll_z = (ll_mean - exact).abs() / (ll_var / 50.0).sqrt();
    let pass = z_po.0 < 5.0 && z_go.0 < 5.0 && z_pf.0 < 5.0 && ll_z < 3.0;
    within_time(
        outcome(
            pass,
            format!(
                "worst mean error in replicate SE (iid sqrt(P/N) SE): enkf perturbed_obs {:.2} ({:.2}), enkf gaussian_obs {:.2} ({:.2}), pf {:.2} ({:.2}); pf loglik {ll_mean:.3} vs exact {exact:.3} ({ll_z:.2} SE over 50 runs)",
                z_po.0, z_po.1, z_go.0, z_go.1, z_pf.0, z_pf.1
            ),
        ),
        start,
        Duration::from_secs(120),
    )
}

/// CW-IEKI posterior means barely move with the ESS target. Each target gets
/// one run; the Monte Carlo SE of a mean is `sd/sqrt(N)` and two targets are
/// compared against the pooled `sqrt(SE_a² + SE_b²)`.
fn criterion_7() -> Outcome {
    let spec = ScalarSigmaSpec::default();
    let n = 1000;
    let summaries: Vec<[(f64, f64); 2]> = [0.5, 0.7, 0.9]
        .iter()
        .enumerate()
        .map(|(t, &target)| {
            // independent seeds, since the pooled SE assumes independent runs
            let model = make_scalar_sigma_model(&spec).unwrap().model;
            let mut cfg = EkiConfig::new(n, 707 + t as u64);
            cfg.ess_target_fraction = target;
            let out = cw_ieki_run(&model, &cfg).unwrap();
            let stat = |p: usize| {
                let (m, v) = mean_var(out.samples.row(p).transpose().as_slice());
                (m, (v / n as f64).sqrt())
            };
            [stat(0), stat(1)]
        })
        .collect();
    let mut worst = 0.0f64;
    for a in 0..3 {
        for b in a + 1..3 {
            for (&(ma, sa), &(mb, sb)) in summaries[a].iter().zip(&summaries[b]) {
                worst = worst.max((ma - mb).abs() / (sa * sa + sb * sb).sqrt());
            }
        }
    }
    let fmt = |s: &[(f64, f64); 2]| format!("theta {:.4}+/-{:.4} sigma {:.4}+/-{:.4}", s[0].0, s[0].1, s[1].0, s[1].1);
    outcome(
        worst < 3.0,
        format!(
            "largest pairwise gap {worst:.2} pooled SE (0.5: {}; 0.7: {}; 0.9: {})",
            fmt(&summaries[0]),
            fmt(&summaries[1]),
            fmt(&summaries[2])
        ),
    )
}

/// Sensitivity eigen-analysis of log-normal samples and exact projections.
fn criterion_8() -> Outcome {
    let s = 100_000;
    let mut rng = Streams::new(808).rng(&[0]);
    let samples = DMatrix::from_fn(2, s, |i, _| {
        let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
        (if i == 0 { 2.0 * z } else { z }).exp()
    });
    let res = sensitivity_matrix(&samples, SampleTransform::Log).unwrap();
    let l = &res.eigenvalues;
    let dot = res.eigenvectors.column(0)[1].abs();
    let eig_ok = (l[0] - 1.0).abs() < 0.05 && (l[1] - 0.25).abs() < 0.05 * 0.25 && dot > 0.99;

    // hand-computed projections
    let e = std::f64::consts::E;
    let fixed = DMatrix::from_column_slice(2, 2, &[e, e * e, 1.0, e.powi(3)]);
    let v = DVector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
    let got = eigenparameter_samples(&fixed, &v, &SampleTransform::Log).unwrap();
    let want = [3.0 / 2f64.sqrt(), 3.0 / 2f64.sqrt()];
    let bounded = DMatrix::from_column_slice(2, 1, &[0.5, 0.25]);
    let w = DVector::from_vec(vec![0.6, 0.8]);
    let got_logit =
        eigenparameter_samples(&bounded, &w, &SampleTransform::Logit(vec![(0.0, 1.0), (0.0, 1.0)])).unwrap();
    let want_logit = 0.8 * (1.0f64 / 3.0).ln();
    let proj_err = got
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs())
        .fold((got_logit[0] - want_logit).abs(), f64::max);
    outcome(
        eig_ok && proj_err < 1e-10,
        format!(
            "eigenvalues ({:.4}, {:.4}) vs (1, 0.25), |v1 . e2| {dot:.5}, projection error {proj_err:.1e}",
            l[0], l[1]
        ),
    )
}

fn criterion_9() -> Outcome {
    let results = common::run_invariant_suite(64);
    let failed: Vec<String> = results
        .iter()
        .filter_map(|(name, err)| err.as_ref().map(|e| format!("{name}: {e}")))
        .collect();
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} invariant families passed", results.len())
        } else {
            format!("failed: {}", failed.join("; "))
        },
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [fn() -> Outcome; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let mut failed = Vec::new();
    for (k, c) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = c();
        report(k + 1, &o, t.elapsed());
        if !o.pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
