//! Hamiltonians for the resonant, dispersive and multi-mode couplings, and
//! exact unitary propagation through a reusable eigendecomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, CMatrix, HermitianEigen, C64};
use crate::quantum::{annihilation, check_density_matrix, number, pauli, sigma_minus, sigma_plus};

/// Default cap on the product of cavity dimensions.
pub const DEFAULT_DIM_CAP: usize = 1024;

/// Parameters of `H = (a/2)σ₃ + ω(b†b + 1/2) + g(bσ₊ + b†σ₋)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianParams {
    pub a: f64,
    pub omega: f64,
    pub g: f64,
    pub dim_cavity: usize,
}

impl HamiltonianParams {
    pub fn new(a: f64, omega: f64, g: f64, dim_cavity: usize) -> Self {
        HamiltonianParams { a, omega, g, dim_cavity }
    }

    fn validate(&self) -> Result<()> {
        validate_common(self.a, &[(self.omega, self.g, self.dim_cavity)])
    }
}

/// Parameters of the dispersive Hamiltonian
/// `H = ω(N̂ + 1/2) + (a/2)σ₃ + (g²/Δ)(N̂ + 1/2)σ₃` with `Δ = a − ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersiveParams {
    pub a: f64,
    pub omega: f64,
    pub g: f64,
    pub dim_cavity: usize,
}

impl DispersiveParams {
    pub fn new(a: f64, omega: f64, g: f64, dim_cavity: usize) -> Self {
        DispersiveParams { a, omega, g, dim_cavity }
    }

    pub fn detuning(&self) -> f64 {
        self.a - self.omega
    }

    /// `g²/|Δ|`; the dispersive description needs this to be small.
    pub fn validity_ratio(&self) -> f64 {
        self.g * self.g / self.detuning().abs()
    }

    /// Eigenvalue of `Â = a + (2g²/Δ)(N̂ + 1/2)` on the number state `n`.
    pub fn shifted_splitting(&self, n: usize) -> f64 {
        self.a + 2.0 * self.g * self.g / self.detuning() * (n as f64 + 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: f64,
    pub g: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultimodeParams {
    pub a: f64,
    pub modes: Vec<Mode>,
    #[serde(default = "default_cap")]
    pub dim_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_DIM_CAP
}

impl MultimodeParams {
    pub fn new(a: f64, modes: Vec<Mode>) -> Self {
        MultimodeParams { a, modes, dim_cap: DEFAULT_DIM_CAP }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.dim_cap = cap;
        self
    }

    /// Product of per-mode dimensions; `None` on overflow.
    pub fn cavity_dim(&self) -> Option<usize> {
        self.modes.iter().try_fold(1usize, |acc, m| acc.checked_mul(m.dim))
    }

    /// `Σ g_i²`, the only coupling combination visible to second order.
    pub fn coupling_norm_sq(&self) -> f64 {
        self.modes.iter().map(|m| m.g * m.g).sum()
    }
}

fn validate_common(a: f64, modes: &[(f64, f64, usize)]) -> Result<()> {
    if !a.is_finite() {
        return Err(Error::InvalidHamiltonian(format!("qubit splitting {a} is not finite")));
    }
    for &(omega, g, dim) in modes {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if !omega.is_finite() || !g.is_finite() {
            return Err(Error::InvalidHamiltonian("parameters must be finite".into()));
        }
        if g < 0.0 {
            return Err(Error::InvalidHamiltonian(format!("coupling g = {g} must be non-negative")));
        }
    }
    Ok(())
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn shifted_number(dim: usize) -> CMatrix {
    number(dim) + CMatrix::identity(dim, dim) * real(0.5)
}

pub fn build_jc_hamiltonian(p: &HamiltonianParams) -> Result<CMatrix> {
    p.validate()?;
    let d = p.dim_cavity;
    let [_, _, s3] = pauli();
    let id_q = CMatrix::identity(2, 2);
    let id_c = CMatrix::identity(d, d);
    let b = annihilation(d);
    let h = kron(&s3, &id_c) * real(p.a / 2.0)
        + kron(&id_q, &shifted_number(d)) * real(p.omega)
        + (kron(&sigma_plus(), &b) + kron(&sigma_minus(), &b.adjoint())) * real(p.g);
    Ok(h)
}

pub fn build_dispersive_hamiltonian(p: &DispersiveParams) -> Result<CMatrix> {
    validate_common(p.a, &[(p.omega, p.g, p.dim_cavity)])?;
    let delta = p.detuning();
    if delta == 0.0 {
        return Err(Error::DetuningZero);
    }
    let d = p.dim_cavity;
    let [_, _, s3] = pauli();
    let id_q = CMatrix::identity(2, 2);
    let id_c = CMatrix::identity(d, d);
    let n_half = shifted_number(d);
    let h = kron(&id_q, &n_half) * real(p.omega)
        + kron(&s3, &id_c) * real(p.a / 2.0)
        + kron(&s3, &n_half) * real(p.g * p.g / delta);
    Ok(h)
}

/// `H = (a/2)σ₃ + Σ_i ω_i(b_i†b_i + 1/2) + Σ_i g_i(b_iσ₊ + b_i†σ₋)` on
/// `qubit ⊗ mode_1 ⊗ … ⊗ mode_N`.
pub fn build_multimode_jc(p: &MultimodeParams) -> Result<CMatrix> {
    if p.modes.is_empty() {
        return Err(Error::InvalidHamiltonian("at least one cavity mode is required".into()));
    }
    let modes: Vec<_> = p.modes.iter().map(|m| (m.omega, m.g, m.dim)).collect();
    validate_common(p.a, &modes)?;
    let dc = match p.cavity_dim() {
        Some(dc) if dc <= p.dim_cap => dc,
        Some(dc) => return Err(Error::Capacity { requested: dc, cap: p.dim_cap }),
        None => return Err(Error::Capacity { requested: usize::MAX, cap: p.dim_cap }),
    };
    let [_, _, s3] = pauli();
    let id_q = CMatrix::identity(2, 2);
    let mut h = kron(&s3, &CMatrix::identity(dc, dc)) * real(p.a / 2.0);
    for (i, m) in p.modes.iter().enumerate() {
        let b = embed_mode(&annihilation(m.dim), &p.modes, i);
        let n_half = embed_mode(&shifted_number(m.dim), &p.modes, i);
        h += kron(&id_q, &n_half) * real(m.omega);
        h += (kron(&sigma_plus(), &b) + kron(&sigma_minus(), &b.adjoint())) * real(m.g);
    }
    Ok(h)
}

/// Places a single-mode operator at position `which` of the mode product.
pub fn embed_mode(op: &CMatrix, modes: &[Mode], which: usize) -> CMatrix {
    modes.iter().enumerate().fold(CMatrix::identity(1, 1), |acc, (i, m)| {
        if i == which {
            kron(&acc, op)
        } else {
            kron(&acc, &CMatrix::identity(m.dim, m.dim))
        }
    })
}

/// Product state `ρ_1 ⊗ ρ_2 ⊗ …` over cavity modes.
pub fn product_state(states: &[CMatrix]) -> CMatrix {
    states.iter().fold(CMatrix::identity(1, 1), |acc, s| kron(&acc, s))
}

/// Exact propagator `e^{−iHt}` backed by one eigendecomposition of `H`.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigen: HermitianEigen,
}

impl Propagator {
    pub fn new(h: &CMatrix) -> Result<Self> {
        Ok(Propagator { eigen: HermitianEigen::new(h)? })
    }

    pub fn dim(&self) -> usize {
        self.eigen.dim()
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    /// `ρ(t) = e^{−iHt} ρ(0) e^{iHt}`
    pub fn evolve(&self, state0: &CMatrix, t: f64) -> Result<CMatrix> {
        if state0.shape() != (self.dim(), self.dim()) {
            return Err(Error::Shape(format!(
                "state {}x{} does not match hamiltonian dimension {}",
                state0.nrows(),
                state0.ncols(),
                self.dim()
            )));
        }
        check_density_matrix(state0)?;
        if t == 0.0 {
            return Ok(state0.clone());
        }
        let mut rot = self.eigen.to_eigenbasis(state0);
        let ph = self.eigen.phases(t);
        for m in 0..self.dim() {
            for n in 0..self.dim() {
                rot[(m, n)] *= ph[m] * ph[n].conj();
            }
        }
        let mut out = self.eigen.from_eigenbasis(&rot);
        // restore exact Hermiticity lost to rounding in the two basis changes
        let n = self.dim();
        for i in 0..n {
            out[(i, i)].im = 0.0;
            for j in (i + 1)..n {
                let avg = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        Ok(out)
    }
}

/// One-shot evolution; prefer [`Propagator`] when evaluating many times.
pub fn evolve(state0: &CMatrix, h: &CMatrix, t: f64) -> Result<CMatrix> {
    Propagator::new(h)?.evolve(state0, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, hermiticity_defect, max_abs, trace, ONE};
    use crate::quantum::{
        build_operators, expectation, partial_trace_cavity, prepare_cavity_state, prepare_qubit_state,
        purity, tensor, CavityStateSpec,
    };
    use approx::assert_abs_diff_eq;

    fn s1(dim: usize) -> HamiltonianParams {
        HamiltonianParams::new(1.0, 1.0, 1.0, dim)
    }

    #[test]
    fn decoupled_hamiltonian_conserves_sigma_z() {
        let h = build_jc_hamiltonian(&HamiltonianParams::new(1.3, 0.7, 0.0, 8)).unwrap();
        let ops = build_operators(8).unwrap();
        assert_eq!(max_abs(&commutator(&h, &ops.sigma[2])), 0.0);
        assert_eq!(max_abs(&commutator(&h, &ops.number)), 0.0);
    }

    #[test]
    fn builders_are_hermitian() {
        let h = build_jc_hamiltonian(&s1(20)).unwrap();
        assert!(hermiticity_defect(&h) < 1e-12);
        let h = build_dispersive_hamiltonian(&DispersiveParams::new(1.0, 3.0, 0.1, 20)).unwrap();
        assert!(hermiticity_defect(&h) < 1e-12);
        let mm = MultimodeParams::new(
            1.0,
            vec![Mode { omega: 1.0, g: 0.6, dim: 4 }, Mode { omega: 1.2, g: 0.8, dim: 5 }],
        );
        assert!(hermiticity_defect(&build_multimode_jc(&mm).unwrap()) < 1e-12);
    }

    #[test]
    fn jc_terms_match_operator_set() {
        let p = HamiltonianParams::new(0.8, 1.1, 0.4, 10);
        let ops = build_operators(10).unwrap();
        let half = C64::new(0.5, 0.0);
        let expected = &ops.sigma[2] * C64::new(p.a / 2.0, 0.0)
            + (&ops.number + &ops.identity * half) * C64::new(p.omega, 0.0)
            + (&ops.b * &ops.sigma_plus + &ops.b_dag * &ops.sigma_minus) * C64::new(p.g, 0.0);
        assert!(max_abs(&(build_jc_hamiltonian(&p).unwrap() - expected)) < 1e-15);
    }

    #[test]
    fn resonant_excitation_blocks_split_by_two_g_sqrt_n() {
        // Analytic 2x2 block {|↑,n-1⟩, |↓,n⟩} at a = ω has eigenvalues
        // ω n ± g√n, so the splitting is 2g√n.
        let (g, omega) = (0.37, 1.4);
        let p = HamiltonianParams::new(omega, omega, g, 12);
        let h = build_jc_hamiltonian(&p).unwrap();
        let eig = HermitianEigen::new(&h).unwrap();
        let mut values = eig.eigenvalues().to_vec();
        values.sort_by(f64::total_cmp);
        for n in 1..8 {
            let lo = omega * n as f64 - g * (n as f64).sqrt();
            let hi = omega * n as f64 + g * (n as f64).sqrt();
            assert!(values.iter().any(|v| (v - lo).abs() < 1e-12), "missing {lo}");
            assert!(values.iter().any(|v| (v - hi).abs() < 1e-12), "missing {hi}");
        }
    }

    #[test]
    fn dispersive_commutes_with_number_and_sigma_z() {
        let p = DispersiveParams::new(1.0, 3.0, 0.1, 10);
        let h = build_dispersive_hamiltonian(&p).unwrap();
        let ops = build_operators(10).unwrap();
        assert_eq!(max_abs(&commutator(&h, &ops.number)), 0.0);
        assert_eq!(max_abs(&commutator(&h, &ops.sigma[2])), 0.0);
    }

    #[test]
    fn dispersive_splitting_on_fock_two() {
        let p = DispersiveParams::new(1.0, 3.0, 0.1, 10);
        assert_abs_diff_eq!(p.detuning(), -2.0);
        assert_abs_diff_eq!(p.shifted_splitting(2), 0.975, epsilon = 1e-15);
        let h = build_dispersive_hamiltonian(&p).unwrap();
        // H|↑,2⟩ − H|↓,2⟩ = Â eigenvalue
        assert_abs_diff_eq!((h[(2, 2)] - h[(12, 12)]).re, 0.975, epsilon = 1e-14);
    }

    #[test]
    fn dispersive_rejects_zero_detuning() {
        let p = DispersiveParams::new(2.0, 2.0, 0.1, 10);
        assert!(matches!(build_dispersive_hamiltonian(&p), Err(Error::DetuningZero)));
    }

    #[test]
    fn dispersive_without_coupling_is_free() {
        let p = DispersiveParams::new(1.0, 3.0, 0.0, 6);
        let free = build_jc_hamiltonian(&HamiltonianParams::new(1.0, 3.0, 0.0, 6)).unwrap();
        assert_eq!(build_dispersive_hamiltonian(&p).unwrap(), free);
    }

    #[test]
    fn single_mode_multimode_matches_jc() {
        let mm = MultimodeParams::new(0.9, vec![Mode { omega: 1.2, g: 0.5, dim: 9 }]);
        let jc = build_jc_hamiltonian(&HamiltonianParams::new(0.9, 1.2, 0.5, 9)).unwrap();
        assert_eq!(build_multimode_jc(&mm).unwrap(), jc);
    }

    #[test]
    fn multimode_zero_coupling_decouples_qubit() {
        let mm = MultimodeParams::new(
            1.0,
            vec![Mode { omega: 1.0, g: 0.0, dim: 3 }, Mode { omega: 2.0, g: 0.0, dim: 4 }],
        );
        let h = build_multimode_jc(&mm).unwrap();
        let s3 = kron(&pauli()[2], &CMatrix::identity(12, 12));
        assert_eq!(max_abs(&commutator(&h, &s3)), 0.0);
    }

    #[test]
    fn multimode_capacity_enforced() {
        let mm = MultimodeParams::new(
            1.0,
            vec![Mode { omega: 1.0, g: 0.6, dim: 40 }, Mode { omega: 1.0, g: 0.8, dim: 40 }],
        )
        .with_cap(1000);
        assert!(matches!(build_multimode_jc(&mm), Err(Error::Capacity { requested: 1600, cap: 1000 })));
    }

    #[test]
    fn negative_coupling_rejected() {
        let err = build_jc_hamiltonian(&HamiltonianParams::new(1.0, 1.0, -0.5, 4)).unwrap_err();
        assert!(matches!(err, Error::InvalidHamiltonian(_)));
    }

    fn s1_joint(k: usize, dim: usize) -> CMatrix {
        let c = prepare_cavity_state(&CavityStateSpec::Coherent(ONE), dim).unwrap();
        tensor(&prepare_qubit_state(k).unwrap(), &c).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let h = build_jc_hamiltonian(&s1(30)).unwrap();
        let rho = s1_joint(1, 30);
        assert_eq!(evolve(&rho, &h, 0.0).unwrap(), rho);
        let red = partial_trace_cavity(&evolve(&rho, &h, 0.0).unwrap()).unwrap();
        assert_eq!(red, prepare_qubit_state(1).unwrap());
    }

    #[test]
    fn unitary_evolution_preserves_purity_and_trace() {
        let h = build_jc_hamiltonian(&s1(30)).unwrap();
        let prop = Propagator::new(&h).unwrap();
        let rho = s1_joint(2, 30);
        let p0 = purity(&rho);
        for &t in &[0.1, 0.7, 2.5, 10.0] {
            let rt = prop.evolve(&rho, t).unwrap();
            assert_abs_diff_eq!(purity(&rt), p0, epsilon = 1e-9);
            assert_abs_diff_eq!(trace(&rt).re, 1.0, epsilon = 1e-10);
            check_density_matrix(&rt).unwrap();
        }
    }

    #[test]
    fn group_property() {
        let h = build_jc_hamiltonian(&HamiltonianParams::new(0.7, 1.3, 0.45, 25)).unwrap();
        let prop = Propagator::new(&h).unwrap();
        let rho = s1_joint(3, 25);
        let direct = prop.evolve(&rho, 1.1).unwrap();
        let stepped = prop.evolve(&prop.evolve(&rho, 0.4).unwrap(), 0.7).unwrap();
        assert!(max_abs(&(direct - stepped)) < 1e-9);
    }

    #[test]
    fn free_precession_closed_form() {
        let a = 1.7;
        let h = build_jc_hamiltonian(&HamiltonianParams::new(a, 1.0, 0.0, 6)).unwrap();
        let prop = Propagator::new(&h).unwrap();
        let c = prepare_cavity_state(&CavityStateSpec::vacuum(), 6).unwrap();
        let rho = tensor(&prepare_qubit_state(1).unwrap(), &c).unwrap();
        for &t in &[0.3, 1.0, 4.2] {
            let red = partial_trace_cavity(&prop.evolve(&rho, t).unwrap()).unwrap();
            let s1 = expectation(&pauli()[0], &red).unwrap().re;
            assert_abs_diff_eq!(s1, (a * t).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn dispersive_conserves_number_and_sigma_z() {
        let p = DispersiveParams::new(1.0, 3.0, 0.1, 30);
        let h = build_dispersive_hamiltonian(&p).unwrap();
        let ops = build_operators(30).unwrap();
        let c = prepare_cavity_state(&CavityStateSpec::Coherent(ONE), 30).unwrap();
        let rho = tensor(&prepare_qubit_state(1).unwrap(), &c).unwrap();
        let prop = Propagator::new(&h).unwrap();
        let n0 = expectation(&ops.number, &rho).unwrap().re;
        let z0 = expectation(&ops.sigma[2], &rho).unwrap().re;
        for &t in &[0.5, 3.0, 20.0] {
            let rt = prop.evolve(&rho, t).unwrap();
            assert_abs_diff_eq!(expectation(&ops.number, &rt).unwrap().re, n0, epsilon = 1e-10);
            assert_abs_diff_eq!(expectation(&ops.sigma[2], &rt).unwrap().re, z0, epsilon = 1e-10);
        }
    }

    #[test]
    fn evolve_rejects_mismatched_state() {
        let h = build_jc_hamiltonian(&s1(5)).unwrap();
        assert!(matches!(evolve(&CMatrix::identity(4, 4), &h, 1.0), Err(Error::Shape(_))));
    }
}
