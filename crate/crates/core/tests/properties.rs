mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #[test]
    fn covariance_is_symmetric_psd(m in ensemble(5, 30)) {
        check_cov_symmetric_psd(m)?;
    }

    #[test]
    fn cross_covariance_transposes(p in ensemble_pair(20)) {
        check_cross_cov_transpose(p)?;
    }

    #[test]
    fn ess_is_bounded_and_permutation_invariant(lw in log_weights(60)) {
        check_ess_bounds(lw)?;
    }

    #[test]
    fn weights_are_shift_invariant(lw in log_weights(40), c in -1e3f64..1e3) {
        check_shift_invariance((lw, c))?;
    }

    #[test]
    fn eki_update_stays_in_subspace(case in subspace_case()) {
        check_subspace(case)?;
    }

    #[test]
    fn adapt_alpha_hits_target(ll in prop::collection::vec(-200.0f64..0.0, 2..80), prev in 0.0f64..0.9) {
        check_adapt_alpha((ll, prev))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn resampling_is_unbiased(lw in log_weights(12), seed in any::<u64>()) {
        check_resampling_unbiased((lw, seed))?;
    }

    #[test]
    fn ieki_schedule_terminates(case in termination_case()) {
        check_h_termination(case)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn output_independent_of_worker_count(seed in any::<u64>()) {
        check_worker_determinism(seed)?;
    }
}
