//! Property checks shared by the proptest suite and the acceptance harness.
#![allow(dead_code)]

use jc_probe::dynamics::{build_jc_hamiltonian, HamiltonianParams, Propagator};
use jc_probe::estimator::{estimate_from_derivatives, finite_difference_derivatives, EstimateOptions};
use jc_probe::linalg::hermiticity_defect;
use jc_probe::oracle::exact_derivatives;
use jc_probe::quantum::{min_eigenvalue, prepare_qubit_state, purity, tensor};
use jc_probe::tomography::io::{from_csv_str, from_json_str, to_csv_string, to_json_string};
use jc_probe::tomography::{
    add_noise, generate_time_series, uniform_grid, NoiseSpec, RecordMeta, TomographyRecord,
};
use jc_probe::{CMatrix, CavityStateSpec, Stencil, C64};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = Result<(), TestCaseError>;

pub const DIM: usize = 30;

pub fn cavity_spec() -> impl Strategy<Value = CavityStateSpec> {
    prop_oneof![
        (-1.2..1.2f64, -1.2..1.2f64).prop_map(|(re, im)| CavityStateSpec::Coherent(C64::new(re, im))),
        (0usize..4).prop_map(CavityStateSpec::Fock),
        (0.0..0.4f64).prop_map(CavityStateSpec::Thermal),
    ]
}

/// `(a, ω, g)`
pub fn params() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.3..1.5f64, 0.3..1.5f64, 0.1..1.2f64)
}

pub fn record_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 9 * 5)
}

/// Frequency scale of the derivative tensors, used to normalise O(δ²) bounds.
fn scale(h: &CMatrix, cavity: &CMatrix) -> f64 {
    let exact = exact_derivatives(h, cavity).unwrap();
    let max_d2 = exact.d2.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    max_d2.sqrt().max(1.0)
}

fn bits(rec: &TomographyRecord) -> Vec<u64> {
    rec.times.iter().chain(rec.series.iter().flatten().flatten()).map(|v| v.to_bits()).collect()
}

/// Hermiticity, trace, positivity and purity conservation along a grid.
pub fn evolved_states_stay_physical((a, w, g): (f64, f64, f64), cav: &CavityStateSpec, k: usize) -> Check {
    let h = build_jc_hamiltonian(&HamiltonianParams::new(a, w, g, DIM)).unwrap();
    let prop = Propagator::new(&h).unwrap();
    let rho0 = tensor(&prepare_qubit_state(k).unwrap(), &cav.prepare(DIM).unwrap()).unwrap();
    let p0 = purity(&rho0);
    for &t in &uniform_grid(0.25, 12) {
        let rho = prop.evolve(&rho0, t).unwrap();
        prop_assert!(hermiticity_defect(&rho) < 1e-12);
        let tr: C64 = (0..rho.nrows()).map(|i| rho[(i, i)]).sum();
        prop_assert!((tr - C64::new(1.0, 0.0)).norm() < 1e-10);
        prop_assert!(min_eigenvalue(&rho) > -1e-10);
        prop_assert!((purity(&rho) - p0).abs() < 1e-9, "purity drift at t = {}", t);
    }
    Ok(())
}

pub fn d1_antisymmetry_is_second_order((a, w, g): (f64, f64, f64), cav: &CavityStateSpec) -> Check {
    let h = build_jc_hamiltonian(&HamiltonianParams::new(a, w, g, DIM)).unwrap();
    let c = cav.prepare(DIM).unwrap();
    let s = scale(&h, &c);
    let rec = generate_time_series(&h, &c, &uniform_grid(0.01, 4)).unwrap();
    let d = finite_difference_derivatives(&rec, Stencil::Forward2, 0.01).unwrap();
    for i in 0..3 {
        for k in 0..3 {
            let r = (d.d1[i][k] + d.d1[k][i]).abs();
            prop_assert!(r < 10.0 * 0.01f64.powi(2) * s.powi(3), "({}, {}) residual {}", i, k, r);
        }
    }
    Ok(())
}

/// Residuals of the relations the estimator does not use, on coherent
/// inputs (nonzero amplitude keeps ω identifiable).
pub fn consistency_residuals_are_second_order((a, w, g): (f64, f64, f64), alpha: C64) -> Check {
    let h = build_jc_hamiltonian(&HamiltonianParams::new(a, w, g, DIM)).unwrap();
    let c = CavityStateSpec::Coherent(alpha).prepare(DIM).unwrap();
    let s = scale(&h, &c);
    for delta in [0.01, 0.005] {
        let rec = generate_time_series(&h, &c, &uniform_grid(delta, 4)).unwrap();
        let d = finite_difference_derivatives(&rec, Stencil::Forward2, delta).unwrap();
        let report = estimate_from_derivatives(&d, &EstimateOptions::default()).unwrap();
        for r in &report.residuals {
            prop_assert!(
                r.value.abs() < 10.0 * delta * delta * s.powi(4),
                "{} = {} at δ = {}",
                r.name,
                r.value,
                delta
            );
        }
    }
    Ok(())
}

pub fn records_round_trip_bit_exact(values: &[f64], dt: f64, noise: Option<(f64, u64)>) -> Check {
    let times: Vec<f64> = (0..5).map(|j| j as f64 * dt).collect();
    let series = std::array::from_fn(|i| {
        std::array::from_fn(|k| values[(3 * i + k) * 5..(3 * i + k + 1) * 5].to_vec())
    });
    let mut rec = TomographyRecord::new(times, series, RecordMeta::default()).unwrap();
    if let Some((sigma, seed)) = noise {
        rec = add_noise(&rec, &NoiseSpec::gaussian(sigma, seed)).unwrap();
    }
    let csv = from_csv_str(&to_csv_string(&rec)).unwrap();
    prop_assert_eq!(bits(&csv), bits(&rec));
    prop_assert_eq!(&csv.meta, &rec.meta);
    let json = from_json_str(&to_json_string(&rec)).unwrap();
    prop_assert_eq!(bits(&json), bits(&rec));
    prop_assert_eq!(&json.meta, &rec.meta);
    Ok(())
}

pub fn seeded_noise_is_deterministic(sigma: f64, seed: u64) -> Check {
    let h = build_jc_hamiltonian(&HamiltonianParams::new(1.0, 1.0, 1.0, 12)).unwrap();
    let c = CavityStateSpec::Coherent(C64::new(0.5, 0.0)).prepare(12).unwrap();
    let rec = generate_time_series(&h, &c, &uniform_grid(0.05, 6)).unwrap();
    let first = add_noise(&rec, &NoiseSpec::gaussian(sigma, seed)).unwrap();
    let second = add_noise(&rec, &NoiseSpec::gaussian(sigma, seed)).unwrap();
    prop_assert_eq!(bits(&first), bits(&second));
    let other = add_noise(&rec, &NoiseSpec::gaussian(sigma, seed.wrapping_add(1))).unwrap();
    prop_assert_ne!(bits(&first), bits(&other));
    Ok(())
}
