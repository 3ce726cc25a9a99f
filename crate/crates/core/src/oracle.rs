//! Exact `t = 0` derivatives of the tomography series and exact cavity moments.
//!
//! The derivatives come from nested commutators,
//! `ċ_i^(k)(0) = tr[η₀^(k) i[H, σ_i]]` and
//! `c̈_i^(k)(0) = tr[η₀^(k) i[H, i[H, σ_i]]]`, evaluated as matrix products.
//! No propagator is involved, so this path shares only the operator builders
//! with the simulation it is used to check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{DerivativeSet, Tensor3, VarianceMatrix};
use crate::linalg::{kron, trace_of_product, CMatrix, SparseRows, C64, I};
use crate::quantum::{annihilation, check_density_matrix, expectation, number, pauli, prepare_qubit_state};

/// Second-order moments of a single cavity mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityMoments {
    /// `⟨b + b†⟩`
    pub b_plus: f64,
    /// `⟨b − b†⟩`, purely imaginary
    pub b_minus: C64,
    /// `⟨(b + b†)²⟩`
    pub x2: f64,
    /// `⟨(i(b − b†))²⟩`
    pub p2: f64,
    /// `⟨b² − b†²⟩`, purely imaginary
    pub b2_diff: C64,
    pub n_mean: f64,
    pub n2_mean: f64,
}

impl CavityMoments {
    /// `(⟨x̂⟩, ⟨p̂⟩)` with `x̂ = (b + b†)/√2`, `p̂ = (b − b†)/(i√2)`.
    pub fn quadrature_means(&self) -> (f64, f64) {
        let s = std::f64::consts::SQRT_2;
        (self.b_plus / s, (self.b_minus / (I * s)).re)
    }

    pub fn variance_matrix(&self) -> VarianceMatrix {
        let (x, p) = self.quadrature_means();
        VarianceMatrix {
            xx: self.x2 / 2.0 - x * x,
            pp: self.p2 / 2.0 - p * p,
            // ⟨{x̂, p̂}⟩/2 = −i⟨b² − b†²⟩/2
            xp: (-I * self.b2_diff).re / 2.0 - x * p,
        }
    }

    pub fn photon_variance(&self) -> f64 {
        self.n2_mean - self.n_mean * self.n_mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub d1_exact: Tensor3,
    pub d2_exact: Tensor3,
    pub moments: CavityMoments,
}

impl OracleReport {
    pub fn derivatives(&self) -> DerivativeSet {
        DerivativeSet::analytic(self.d1_exact, self.d2_exact)
    }
}

/// Exact derivative tensors for joint Hamiltonian `h` and cavity state
/// `cavity` (any number of modes). Indexed `[i][k]`.
pub fn exact_derivatives(h: &CMatrix, cavity: &CMatrix) -> Result<DerivativeSet> {
    let n = h.nrows();
    if !h.is_square() || !cavity.is_square() || 2 * cavity.nrows() != n {
        return Err(Error::Shape(format!(
            "hamiltonian {}x{} and cavity state {}x{} are incompatible",
            h.nrows(),
            h.ncols(),
            cavity.nrows(),
            cavity.ncols()
        )));
    }
    check_density_matrix(cavity)?;
    let hs = SparseRows::new(h);
    let id_c = CMatrix::identity(cavity.nrows(), cavity.nrows());
    let states = [1, 2, 3].map(|k| kron(&prepare_qubit_state(k).expect("k in range"), cavity));
    let mut d1 = [[0.0; 3]; 3];
    let mut d2 = [[0.0; 3]; 3];
    for (i, s) in pauli().iter().enumerate() {
        let sigma = kron(s, &id_c);
        let first = hs.commutator_hermitian(&sigma) * I;
        let second = hs.commutator_hermitian(&first) * I;
        for (k, eta) in states.iter().enumerate() {
            d1[i][k] = trace_of_product(eta, &first).re;
            d2[i][k] = trace_of_product(eta, &second).re;
        }
    }
    Ok(DerivativeSet::analytic(d1, d2))
}

/// Exact derivatives plus the single-mode cavity moments.
pub fn analytic_derivatives(h: &CMatrix, cavity: &CMatrix) -> Result<OracleReport> {
    let d = exact_derivatives(h, cavity)?;
    Ok(OracleReport { d1_exact: d.d1, d2_exact: d.d2, moments: cavity_moments(cavity)? })
}

pub fn cavity_moments(state: &CMatrix) -> Result<CavityMoments> {
    let dim = state.nrows();
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let b = annihilation(dim);
    let bd = b.adjoint();
    let plus = &b + &bd;
    let minus = &b - &bd;
    let p_op = &minus * I;
    let nn = number(dim);
    let ev = |op: &CMatrix| expectation(op, state);
    Ok(CavityMoments {
        b_plus: ev(&plus)?.re,
        b_minus: ev(&minus)?,
        x2: ev(&(&plus * &plus))?.re,
        p2: ev(&(&p_op * &p_op))?.re,
        b2_diff: ev(&(&b * &b - &bd * &bd))?,
        n_mean: ev(&nn)?.re,
        n2_mean: ev(&(&nn * &nn))?.re,
    })
}

/// Closed-form first and second derivatives of the resonant model in terms
/// of the couplings and cavity moments: `ċ₁^(2) = −a`, `ċ₁^(3) = ig⟨b−b†⟩`,
/// `ċ₂^(3) = −g⟨b+b†⟩` (antisymmetric), and the nine second-derivative
/// relations.
pub fn closed_form_derivatives(a: f64, omega: f64, g: f64, m: &CavityMoments) -> DerivativeSet {
    let ig_minus = (I * g * m.b_minus).re;
    let g_plus = g * m.b_plus;
    let d1 = [[0.0, -a, ig_minus], [a, 0.0, -g_plus], [-ig_minus, g_plus, 0.0]];
    let g2 = g * g;
    let squeeze = (I * g2 * m.b2_diff).re;
    let d2 = [
        [-a * a - g2 * m.p2, squeeze, (a + omega) * g_plus],
        [squeeze, -a * a - g2 * m.x2, (a + omega) * ig_minus],
        [(a - omega) * g_plus - 2.0 * g2, (a - omega) * ig_minus - 2.0 * g2, -g2 * (m.x2 + m.p2) - 2.0 * g2],
    ];
    DerivativeSet::analytic(d1, d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_jc_hamiltonian, HamiltonianParams};
    use crate::quantum::{prepare_cavity_state, CavityStateSpec};
    use approx::assert_abs_diff_eq;

    fn s1() -> OracleReport {
        let h = build_jc_hamiltonian(&HamiltonianParams::new(1.0, 1.0, 1.0, 50)).unwrap();
        let c = prepare_cavity_state(&CavityStateSpec::Coherent(C64::new(1.0, 0.0)), 50).unwrap();
        analytic_derivatives(&h, &c).unwrap()
    }

    fn assert_tensor(actual: &Tensor3, expected: &Tensor3, tol: f64) {
        for i in 0..3 {
            for k in 0..3 {
                assert!(
                    (actual[i][k] - expected[i][k]).abs() <= tol,
                    "[{i}][{k}]: {} vs {}",
                    actual[i][k],
                    expected[i][k]
                );
            }
        }
    }

    #[test]
    fn s1_first_derivatives() {
        let r = s1();
        assert_tensor(&r.d1_exact, &[[0.0, -1.0, 0.0], [1.0, 0.0, -2.0], [0.0, 2.0, 0.0]], 1e-10);
    }

    #[test]
    fn s1_second_derivatives() {
        let r = s1();
        assert_abs_diff_eq!(r.d2_exact[0][0], -2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.d2_exact[1][1], -6.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.d2_exact[2][2], -8.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.d2_exact[0][2], 4.0, epsilon = 1e-10);
    }

    #[test]
    fn decoupled_second_derivatives() {
        let a = 1.3;
        let h = build_jc_hamiltonian(&HamiltonianParams::new(a, 0.8, 0.0, 20)).unwrap();
        let c = prepare_cavity_state(&CavityStateSpec::Thermal(0.2), 20).unwrap();
        let r = analytic_derivatives(&h, &c).unwrap();
        assert_tensor(&r.d2_exact, &[[-a * a, 0.0, 0.0], [0.0, -a * a, 0.0], [0.0, 0.0, 0.0]], 1e-12);
        assert_tensor(&r.d1_exact, &[[0.0, -a, 0.0], [a, 0.0, 0.0], [0.0, 0.0, 0.0]], 1e-12);
    }

    #[test]
    fn coherent_moments() {
        let m = s1().moments;
        assert_abs_diff_eq!(m.b_plus, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.x2, 5.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.p2, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.n_mean, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.photon_variance(), 1.0, epsilon = 1e-10);
        let v = m.variance_matrix();
        assert_abs_diff_eq!(v.xx, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(v.pp, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(v.xp, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn fock_moments() {
        for n in 0..4 {
            let c = prepare_cavity_state(&CavityStateSpec::Fock(n), 8).unwrap();
            let m = cavity_moments(&c).unwrap();
            assert_eq!(m.b_plus, 0.0);
            assert_eq!(m.b_minus, C64::new(0.0, 0.0));
            assert_abs_diff_eq!(m.x2, 2.0 * n as f64 + 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn vacuum_is_minimum_uncertainty() {
        let c = prepare_cavity_state(&CavityStateSpec::vacuum(), 6).unwrap();
        let v = cavity_moments(&c).unwrap().variance_matrix();
        assert_abs_diff_eq!(v.xx * v.pp, 0.25, epsilon = 1e-14);
    }

    /// `(|0⟩ + e^{iφ}|2⟩)/√2` has `⟨b²⟩ ≠ 0`, exercising the squeezing terms.
    fn two_photon_superposition(dim: usize, phase: f64) -> CMatrix {
        let mut psi = vec![C64::new(0.0, 0.0); dim];
        psi[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        psi[2] = C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, phase);
        CMatrix::from_fn(dim, dim, |i, j| psi[i] * psi[j].conj())
    }

    #[test]
    fn closed_form_matches_commutators() {
        let states = [
            ("coherent 1", prepare_cavity_state(&CavityStateSpec::Coherent(C64::new(1.0, 0.0)), 40).unwrap()),
            (
                "coherent complex",
                prepare_cavity_state(&CavityStateSpec::Coherent(C64::new(0.6, -0.9)), 40).unwrap(),
            ),
            ("thermal", prepare_cavity_state(&CavityStateSpec::Thermal(0.7), 60).unwrap()),
            ("fock 3", prepare_cavity_state(&CavityStateSpec::Fock(3), 40).unwrap()),
            ("superposition", two_photon_superposition(40, 0.8)),
        ];
        let params = [(1.0, 1.0, 1.0), (0.7, 1.9, 0.35), (2.0, -0.5, 1.4)];
        for (label, c) in &states {
            for &(a, omega, g) in &params {
                let h = build_jc_hamiltonian(&HamiltonianParams::new(a, omega, g, c.nrows())).unwrap();
                let exact = exact_derivatives(&h, c).unwrap();
                let model = closed_form_derivatives(a, omega, g, &cavity_moments(c).unwrap());
                for i in 0..3 {
                    for k in 0..3 {
                        assert!(
                            (exact.d1[i][k] - model.d1[i][k]).abs() < 1e-12,
                            "{label} d1[{i}][{k}] {} vs {}",
                            exact.d1[i][k],
                            model.d1[i][k]
                        );
                        assert!(
                            (exact.d2[i][k] - model.d2[i][k]).abs() < 1e-11,
                            "{label} a={a} w={omega} g={g} d2[{i}][{k}] {} vs {}",
                            exact.d2[i][k],
                            model.d2[i][k]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn first_derivatives_antisymmetric() {
        let c = prepare_cavity_state(&CavityStateSpec::Coherent(C64::new(0.4, 1.1)), 40).unwrap();
        let h = build_jc_hamiltonian(&HamiltonianParams::new(0.9, 1.4, 0.6, 40)).unwrap();
        let d = exact_derivatives(&h, &c).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                assert!((d.d1[i][k] + d.d1[k][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let h = build_jc_hamiltonian(&HamiltonianParams::new(1.0, 1.0, 1.0, 5)).unwrap();
        let c = prepare_cavity_state(&CavityStateSpec::vacuum(), 6).unwrap();
        assert!(matches!(exact_derivatives(&h, &c), Err(Error::Shape(_))));
    }
}
