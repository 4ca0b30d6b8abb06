use crate::error::{Error, Result};
use crate::stats::{normalize_log_weights, WeightVector};

pub const ALPHA_TOLERANCE: f64 = 1e-8;
pub const MAX_BISECTIONS: usize = 100;
pub const MAX_REPEATS: usize = 500;

/// `α·ℓ` with the convention `0·(−∞) = 0`, so that a zero-temperature target
/// ignores the likelihood entirely.
pub fn tempered(alpha: f64, loglik: f64) -> f64 {
    if alpha == 0.0 {
        0.0
    } else {
        alpha * loglik
    }
}

/// Normalized incremental weights `w_n ∝ exp((α − α_prev)·ℓ_n)`.
pub fn reweight(loglik: &[f64], alpha_prev: f64, alpha: f64) -> Result<WeightVector> {
    let delta = alpha - alpha_prev;
    let logw: Vec<f64> = loglik.iter().map(|&l| tempered(delta, l)).collect();
    normalize_log_weights(&logw)
}

fn ess_at(loglik: &[f64], alpha_prev: f64, alpha: f64) -> f64 {
    reweight(loglik, alpha_prev, alpha).map(|w| w.ess()).unwrap_or(0.0)
}

/// Largest `α ∈ (α_prev, 1]` whose incremental weights keep `ESS ≥ target_ess`,
/// by bisection to `1e-8`. Returns exactly 1 when the full step is affordable.
///
/// Particles with `ℓ = −∞` lose all weight for any positive increment; if they
/// make the target unattainable the target is scaled by the surviving fraction.
pub fn adapt_alpha(loglik: &[f64], alpha_prev: f64, target_ess: f64) -> Result<f64> {
    let n = loglik.len();
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if !(0.0..1.0).contains(&alpha_prev) {
        return Err(Error::InvalidParameter(format!(
            "alpha_prev must lie in [0, 1), got {alpha_prev}"
        )));
    }
    if !(target_ess > 0.0 && target_ess <= n as f64) {
        return Err(Error::InvalidParameter(format!(
            "target ESS must lie in (0, {n}], got {target_ess}"
        )));
    }
    let finite = loglik.iter().filter(|l| l.is_finite()).count();
    if finite == 0 {
        return Err(Error::ZeroWeights);
    }
    let mut target = target_ess;
    if (finite as f64) < target {
        target *= finite as f64 / n as f64;
        log::warn!(
            "{} of {n} particles have zero likelihood; ESS target lowered to {target:.1}",
            n - finite
        );
    }
    if ess_at(loglik, alpha_prev, 1.0) >= target {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (alpha_prev, 1.0);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= ALPHA_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if ess_at(loglik, alpha_prev, mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // lo can only equal alpha_prev if the ESS drops below target for every
    // representable increment; take the smallest bracketing step instead
    Ok(if lo > alpha_prev { lo } else { hi })
}

/// `M = ⌈log c / log(1 − p̂)⌉` clamped to `[s1, max_repeats]`; `p̂ = 0` maps to
/// `max_repeats`.
pub fn adapt_repeats(p_hat: f64, c: f64, s1: usize, max_repeats: usize) -> usize {
    let raw = if !(p_hat > 0.0) {
        max_repeats
    } else if p_hat >= 1.0 {
        1
    } else {
        let m = (c.ln() / (1.0 - p_hat).ln()).ceil();
        if m.is_finite() && m < max_repeats as f64 {
            m.max(1.0) as usize
        } else {
            max_repeats
        }
    };
    raw.clamp(s1.min(max_repeats), max_repeats)
}
