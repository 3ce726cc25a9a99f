//! Randomised invariants over the simulation, estimation and I/O layers.

mod common;

use jc_probe::C64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn evolved_states_stay_physical(p in common::params(), cav in common::cavity_spec(), k in 1usize..=3) {
        common::evolved_states_stay_physical(p, &cav, k)?;
    }

    #[test]
    fn d1_antisymmetry_residual_is_second_order(p in common::params(), cav in common::cavity_spec()) {
        common::d1_antisymmetry_is_second_order(p, &cav)?;
    }

    #[test]
    fn consistency_residuals_are_second_order(p in common::params(), re in 0.4..1.2f64, im in -1.0..1.0f64) {
        common::consistency_residuals_are_second_order(p, C64::new(re, im))?;
    }

    #[test]
    fn records_round_trip_bit_exact(
        values in common::record_values(),
        dt in 1e-6..10.0f64,
        noise in prop::option::of((1e-6..1e-1f64, any::<u64>())),
    ) {
        common::records_round_trip_bit_exact(&values, dt, noise)?;
    }

    #[test]
    fn seeded_noise_is_deterministic(sigma in 1e-4..1e-1f64, seed in any::<u64>()) {
        common::seeded_noise_is_deterministic(sigma, seed)?;
    }
}
