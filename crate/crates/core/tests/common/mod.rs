//! Invariant checks shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use ekinfer::eki::{cw_ieki_run, eki_measurement_update, EkiConfig, GammaSet};
use ekinfer::filters::{bootstrap_pf, enkf, EnkfVariant, Lgssm};
use ekinfer::models::{make_linear_gaussian, make_scalar_sigma_model, scalar_conjugate, Covariance, ScalarSigmaSpec};
use ekinfer::stats::{
    ess, normalize_log_weights, resample_indices, sample_cov, sample_cross_cov, Ensemble, ResampleScheme,
    WeightVector,
};
use ekinfer::streams::Streams;
use ekinfer::tempersmc::{adapt_alpha, reweight, smc_run, SmcConfig};

pub type Check = std::result::Result<(), TestCaseError>;

pub fn ensemble(max_dim: usize, max_n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_dim, 2..=max_n).prop_flat_map(|(d, n)| {
        prop::collection::vec(-100.0f64..100.0, d * n).prop_map(move |v| DMatrix::from_vec(d, n, v))
    })
}

pub fn ensemble_pair(max_n: usize) -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
    (1..=4usize, 1..=4usize, 2..=max_n).prop_flat_map(|(da, db, n)| {
        (
            prop::collection::vec(-10.0f64..10.0, da * n).prop_map(move |v| DMatrix::from_vec(da, n, v)),
            prop::collection::vec(-10.0f64..10.0, db * n).prop_map(move |v| DMatrix::from_vec(db, n, v)),
        )
    })
}

pub fn log_weights(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 1..=max_n)
}

pub fn check_cov_symmetric_psd(m: DMatrix<f64>) -> Check {
    let c = sample_cov(&Ensemble::new(m).unwrap()).unwrap();
    let scale = c.trace().abs().max(1.0);
    prop_assert!((&c - c.transpose()).amax() <= 1e-12 * scale, "asymmetric covariance");
    let min_eig = c.symmetric_eigenvalues().min();
    prop_assert!(min_eig >= -1e-9 * scale, "negative eigenvalue {min_eig}");
    Ok(())
}

pub fn check_cross_cov_transpose((a, b): (DMatrix<f64>, DMatrix<f64>)) -> Check {
    let ea = Ensemble::new(a).unwrap();
    let eb = Ensemble::new(b).unwrap();
    let ab = sample_cross_cov(&ea, &eb).unwrap();
    let ba = sample_cross_cov(&eb, &ea).unwrap();
    prop_assert!((ab - ba.transpose()).amax() <= 1e-12);
    Ok(())
}

pub fn check_ess_bounds(lw: Vec<f64>) -> Check {
    let n = lw.len() as f64;
    let w = normalize_log_weights(&lw).unwrap();
    let e = w.ess();
    prop_assert!(e >= 1.0 - 1e-9 && e <= n + 1e-9, "ess {e} outside [1, {n}]");
    let mut rev: Vec<f64> = w.iter().copied().collect();
    rev.reverse();
    prop_assert!((ess(&rev).unwrap() - e).abs() <= 1e-9 * n);
    Ok(())
}

pub fn check_shift_invariance((lw, c): (Vec<f64>, f64)) -> Check {
    let a = normalize_log_weights(&lw).unwrap();
    let shifted: Vec<f64> = lw.iter().map(|v| v + c).collect();
    let b = normalize_log_weights(&shifted).unwrap();
    for (x, y) in a.iter().zip(b.iter()) {
        prop_assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
    }
    // tempered increments see the same shift as a constant factor
    let ra = reweight(&lw, 0.2, 0.7).unwrap();
    let rb = reweight(&shifted, 0.2, 0.7).unwrap();
    for (x, y) in ra.iter().zip(rb.iter()) {
        prop_assert!((x - y).abs() <= 1e-12);
    }
    Ok(())
}

/// Systematic counts stay within one of `N w_i`; multinomial counts average to `N w_i`.
pub fn check_resampling_unbiased((lw, seed): (Vec<f64>, u64)) -> Check {
    let w = normalize_log_weights(&lw).unwrap();
    let n = w.len();
    let streams = Streams::new(seed);
    let mut rng = streams.rng(&[0]);
    let mut counts = vec![0usize; n];
    for i in resample_indices(&w, ResampleScheme::Systematic, &mut rng) {
        counts[i] += 1;
    }
    for (c, wi) in counts.iter().zip(w.iter()) {
        let expect = n as f64 * wi;
        prop_assert!(
            *c as f64 >= (expect - 1e-9).floor() && *c as f64 <= (expect + 1e-9).ceil(),
            "systematic count {c} vs {expect}"
        );
    }
    let reps = 2000usize;
    let mut totals = vec![0usize; n];
    for r in 0..reps {
        for i in resample_indices(&w, ResampleScheme::Multinomial, &mut streams.rng(&[1, r as u64])) {
            totals[i] += 1;
        }
    }
    for (t, wi) in totals.iter().zip(w.iter()) {
        let mean = *t as f64 / reps as f64;
        let se = (n as f64 * wi * (1.0 - wi) / reps as f64).sqrt();
        prop_assert!((mean - n as f64 * wi).abs() <= 5.0 * se + 1e-3, "multinomial mean {mean} vs {}", n as f64 * wi);
    }
    Ok(())
}

/// The EKI update moves each member within the span of the initial deviations.
pub fn subspace_case() -> impl Strategy<Value = (usize, u64)> {
    (3usize..=6, any::<u64>())
}

pub fn check_subspace((n, seed): (usize, u64)) -> Check {
    let (d, dy) = (7usize, 3usize);
    let streams = Streams::new(seed);
    let mut rng = streams.rng(&[0]);
    let mut normal = || -> f64 { rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng) };
    let theta = DMatrix::from_fn(d, n, |_, _| normal());
    let a = DMatrix::from_fn(dy, d, |_, _| normal());
    // mildly nonlinear forward map
    let g = (&a * &theta).map(|v| v + 0.1 * v.sin());
    let y = DVector::from_fn(dy, |_, _| normal());
    let z = DMatrix::from_fn(dy, n, |_, _| normal());
    let te = Ensemble::new(theta.clone()).unwrap();
    let ge = Ensemble::new(g).unwrap();
    let gammas = GammaSet::Shared(Covariance::identity(dy));
    let updated = eki_measurement_update(&te, &ge, &y, &gammas, 0.4, &z).unwrap();

    let mean = theta.column_mean();
    let mut dev = theta.clone();
    for mut c in dev.column_iter_mut() {
        c -= &mean;
    }
    // deviations sum to zero, so the first n-1 columns span the same space
    let basis = dev.columns(0, n - 1).into_owned().qr().q();
    let step = updated.matrix() - &theta;
    let resid = &step - &basis * (basis.transpose() * &step);
    prop_assert!(resid.amax() <= 1e-8 * (1.0 + step.amax()), "residual {}", resid.amax());
    Ok(())
}

/// Adaptive steps land on the ESS target or on α = 1, and IEKI always finishes.
pub fn termination_case() -> impl Strategy<Value = (f64, f64, f64, u64)> {
    (0.2f64..3.0, 0.01f64..2.0, -3.0f64..3.0, any::<u64>())
}

pub fn check_h_termination((a, gamma, y, seed): (f64, f64, f64, u64)) -> Check {
    let lg = make_linear_gaussian(
        DMatrix::from_element(1, 1, a),
        DMatrix::from_element(1, 1, gamma),
        DVector::zeros(1),
        DMatrix::identity(1, 1),
        DVector::from_element(1, y),
    )
    .unwrap();
    let mut cfg = EkiConfig::new(50, seed);
    cfg.max_iterations = 200;
    let out = cw_ieki_run(&lg.model, &cfg).unwrap();
    let r = &out.report;
    prop_assert_eq!(*r.alphas.last().unwrap(), 1.0);
    prop_assert!(r.alphas.windows(2).all(|w| w[0] < w[1]));
    let total: f64 = r.increments.iter().sum();
    prop_assert!((total - 1.0).abs() <= 1e-12, "sum of steps {total}");
    Ok(())
}

pub fn check_adapt_alpha((ll, prev): (Vec<f64>, f64)) -> Check {
    let n = ll.len() as f64;
    let target = 0.5 * n;
    let alpha = adapt_alpha(&ll, prev, target).unwrap();
    prop_assert!(alpha > prev && alpha <= 1.0);
    let e = reweight(&ll, prev, alpha).unwrap().ess();
    if alpha < 1.0 {
        prop_assert!((e - target).abs() <= 1e-3 * n, "ess {e} vs target {target}");
    } else {
        prop_assert!(e >= target * (1.0 - 1e-6));
    }
    Ok(())
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

/// Same seed, different worker counts, bitwise identical output.
pub fn check_worker_determinism(seed: u64) -> Check {
    let spec = ScalarSigmaSpec {
        observations: 8,
        ..Default::default()
    };
    let run_cw = || {
        let m = make_scalar_sigma_model(&spec).unwrap();
        let mut cfg = EkiConfig::new(64, seed);
        cfg.m_noise = 10;
        cw_ieki_run(&m.model, &cfg).unwrap()
    };
    let run_smc = || smc_run(&scalar_conjugate().model, &SmcConfig::new(64, seed)).unwrap();
    let lgssm = Lgssm::new(
        DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.0, 0.8]),
        DMatrix::identity(2, 2) * 0.1,
        DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        DMatrix::from_element(1, 1, 0.3),
        DVector::zeros(2),
        DMatrix::identity(2, 2),
    )
    .unwrap();
    let (_, ys) = lgssm.simulate(10, &mut Streams::new(seed).rng(&[9]));
    let run_filters = || {
        let s = Streams::new(seed);
        let e = enkf(&lgssm, &ys, 64, EnkfVariant::PerturbedObs, &s).unwrap();
        let p = bootstrap_pf(&lgssm, &ys, 64, &s).unwrap();
        (e.filter.means, p.means, p.loglik)
    };
    let (a1, b1, c1) = in_pool(1, || (run_cw(), run_smc(), run_filters()));
    let (a4, b4, c4) = in_pool(4, || (run_cw(), run_smc(), run_filters()));
    prop_assert_eq!(&a1.samples, &a4.samples);
    prop_assert_eq!(&a1.report, &a4.report);
    prop_assert_eq!(&b1.samples, &b4.samples);
    prop_assert_eq!(&b1.report, &b4.report);
    prop_assert_eq!(c1, c4);
    Ok(())
}

/// Runs every invariant through a proptest runner; returns (name, error) per failure.
pub fn run_invariant_suite(cases: u32) -> Vec<(&'static str, Option<String>)> {
    fn go<S: Strategy>(cases: u32, s: S, f: impl Fn(S::Value) -> Check) -> Option<String> {
        let mut runner = TestRunner::new(Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        });
        runner.run(&s, f).err().map(|e| e.to_string())
    }
    let slow = (cases / 8).max(2);
    vec![
        ("covariance symmetric psd", go(cases, ensemble(5, 30), check_cov_symmetric_psd)),
        ("cross covariance transpose", go(cases, ensemble_pair(20), check_cross_cov_transpose)),
        ("ess bounds", go(cases, log_weights(60), check_ess_bounds)),
        ("weight shift invariance", go(cases, (log_weights(40), -1e3f64..1e3), check_shift_invariance)),
        ("resampling unbiased", go(slow, (log_weights(12), any::<u64>()), check_resampling_unbiased)),
        ("subspace property", go(cases, subspace_case(), check_subspace)),
        ("adapt alpha hits target", go(cases, (prop::collection::vec(-200.0f64..0.0, 2..80), 0.0f64..0.9), check_adapt_alpha)),
        ("h schedule terminates", go(slow, termination_case(), check_h_termination)),
        ("worker-count determinism", go(2, any::<u64>(), check_worker_determinism)),
    ]
}

pub fn weights_from(v: &[f64]) -> WeightVector {
    WeightVector::new(v.to_vec()).unwrap()
}
