use nalgebra::{DMatrix, DVector};

use ekinfer::filters::{bootstrap_pf, enkf, kalman_filter, EnkfVariant, Lgssm};
use ekinfer::models::scalar_conjugate;
use ekinfer::stats::Cholesky;
use ekinfer::streams::Streams;
use ekinfer::tempersmc::{mh_mutate, Particle, TemperState};

fn normal_draws(n: usize, mean: f64, var: f64, seed: u64) -> Vec<f64> {
    let mut rng = Streams::new(seed).rng(&[0]);
    (0..n)
        .map(|_| {
            let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            mean + var.sqrt() * z
        })
        .collect()
}

fn moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Random-walk MH leaves the tempered conjugate posterior invariant.
#[test]
fn mh_mutation_preserves_tempered_posterior() {
    let lg = scalar_conjugate();
    let n = 20_000;
    for (alpha, seed) in [(1.0, 1u64), (0.25, 2)] {
        let (mean, cov) = lg.tempered_posterior(alpha).unwrap();
        let (m0, v0) = (mean[0], cov[(0, 0)]);
        let particles = normal_draws(n, m0, v0, seed)
            .into_iter()
            .map(|x| Particle::evaluate(&lg.model, DVector::from_element(1, x)))
            .collect();
        let mut state = TemperState {
            particles,
            alpha,
            j: 1,
        };
        let prop = Cholesky::new(&DMatrix::from_element(1, 1, v0)).unwrap();
        let stats = mh_mutate(&mut state, &lg.model, 10, &prop, &Streams::new(seed + 10), 0);
        assert!(stats.rate() > 0.3 && stats.rate() < 0.9, "acceptance {}", stats.rate());
        let xs: Vec<f64> = state.particles.iter().map(|p| p.x[0]).collect();
        let (m, v) = moments(&xs);
        // the chains start in stationarity, so only Monte Carlo error remains
        assert!((m - m0).abs() < 5.0 * (v0 / n as f64).sqrt(), "alpha {alpha}: mean {m} vs {m0}");
        assert!((v - v0).abs() < 5.0 * v0 * (2.0 / n as f64).sqrt(), "alpha {alpha}: var {v} vs {v0}");
    }
}

fn lgssm() -> Lgssm {
    Lgssm::new(
        DMatrix::from_row_slice(2, 2, &[0.95, 0.1, 0.0, 0.9]),
        DMatrix::identity(2, 2) * 0.05,
        DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        DMatrix::from_element(1, 1, 0.25),
        DVector::zeros(2),
        DMatrix::identity(2, 2),
    )
    .unwrap()
}

fn rmse_vs_kalman(means: &[DVector<f64>], kf: &[DVector<f64>]) -> f64 {
    let s: f64 = means.iter().zip(kf).map(|(a, b)| (a - b).norm_squared()).sum();
    (s / means.len() as f64).sqrt()
}

/// Ensemble and particle errors against the exact filter shrink with N.
#[test]
fn filter_error_shrinks_with_ensemble_size() {
    let m = lgssm();
    let (_, ys) = m.simulate(40, &mut Streams::new(3).rng(&[0]));
    let kf = kalman_filter(&m, &ys).unwrap();
    let avg = |n: usize, f: &dyn Fn(usize, &Streams) -> Vec<DVector<f64>>| -> f64 {
        (0..6u64).map(|r| rmse_vs_kalman(&f(n, &Streams::new(50 + r)), &kf.means)).sum::<f64>() / 6.0
    };
    for variant in [EnkfVariant::PerturbedObs, EnkfVariant::GaussianObs] {
        let f = |n: usize, s: &Streams| enkf(&m, &ys, n, variant, s).unwrap().filter.means;
        let (small, large) = (avg(100, &f), avg(3200, &f));
        // error scales like N^{-1/2}: a 32x larger ensemble should cut it well over 2x
        assert!(large < small / 2.5, "{variant:?}: {small} -> {large}");
    }
    let f = |n: usize, s: &Streams| bootstrap_pf(&m, &ys, n, s).unwrap().means;
    let (small, large) = (avg(100, &f), avg(3200, &f));
    assert!(large < small / 2.5, "pf: {small} -> {large}");
}

#[test]
fn pf_loglik_variance_shrinks_with_particles() {
    let m = lgssm();
    let (_, ys) = m.simulate(40, &mut Streams::new(4).rng(&[0]));
    let var = |n: usize| {
        let v: Vec<f64> = (0..20u64)
            .map(|r| bootstrap_pf(&m, &ys, n, &Streams::new(900 + r)).unwrap().loglik.unwrap())
            .collect();
        moments(&v).1
    };
    let (small, large) = (var(100), var(1600));
    assert!(large < small / 4.0, "loglik variance {small} -> {large}");
}
