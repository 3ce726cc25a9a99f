//! Truncated Fock-space operators, state preparation and reduced states.
//!
//! Joint operators always put the qubit factor first: `σ_i ⊗ 1_C` and
//! `1_2 ⊗ b`. Qubit basis index 0 is the `σ₃ = +1` state.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, kron, trace, CMatrix, C64, I, ONE, ZERO};

/// Default cap on the discarded probability of a truncated cavity state.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-10;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-10;

/// The three Pauli matrices, `σ₁, σ₂, σ₃`.
pub fn pauli() -> [CMatrix; 3] {
    [
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

/// `σ₊ = (σ₁ + iσ₂)/2`, raising the qubit from index 1 to index 0.
pub fn sigma_plus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

pub fn sigma_minus() -> CMatrix {
    sigma_plus().adjoint()
}

/// Annihilation operator on the lowest `dim` number states.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut b = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        b[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    b
}

pub fn number(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| if i == j { C64::new(i as f64, 0.0) } else { ZERO })
}

/// Joint-space operators for a qubit and one truncated cavity mode.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub dim_cavity: usize,
    /// `σ_i ⊗ 1_C`
    pub sigma: [CMatrix; 3],
    pub sigma_plus: CMatrix,
    pub sigma_minus: CMatrix,
    /// `1_2 ⊗ b`
    pub b: CMatrix,
    pub b_dag: CMatrix,
    pub number: CMatrix,
    pub identity: CMatrix,
}

impl OperatorSet {
    pub fn new(dim_cavity: usize) -> Result<Self> {
        if dim_cavity < 2 {
            return Err(Error::InvalidDimension(dim_cavity));
        }
        let id_c = CMatrix::identity(dim_cavity, dim_cavity);
        let id_q = CMatrix::identity(2, 2);
        let b_c = annihilation(dim_cavity);
        let [s1, s2, s3] = pauli();
        let b = kron(&id_q, &b_c);
        Ok(OperatorSet {
            dim_cavity,
            sigma: [kron(&s1, &id_c), kron(&s2, &id_c), kron(&s3, &id_c)],
            sigma_plus: kron(&sigma_plus(), &id_c),
            sigma_minus: kron(&sigma_minus(), &id_c),
            b_dag: b.adjoint(),
            b,
            number: kron(&id_q, &number(dim_cavity)),
            identity: CMatrix::identity(2 * dim_cavity, 2 * dim_cavity),
        })
    }

    pub fn joint_dim(&self) -> usize {
        2 * self.dim_cavity
    }
}

/// Convenience wrapper over [`OperatorSet::new`].
pub fn build_operators(dim_cavity: usize) -> Result<OperatorSet> {
    OperatorSet::new(dim_cavity)
}

/// `ρ₀^(k) = (1 + σ_k)/2` for `k ∈ {1, 2, 3}`.
pub fn prepare_qubit_state(k: usize) -> Result<CMatrix> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidPreparation(k));
    }
    let half = C64::new(0.5, 0.0);
    let sigma = &pauli()[k - 1];
    Ok((CMatrix::identity(2, 2) + sigma) * half)
}

/// Initial state of the cavity mode.
#[derive(Debug, Clone, PartialEq)]
pub enum CavityStateSpec {
    Coherent(C64),
    Fock(usize),
    Thermal(f64),
    Custom(CMatrix),
}

impl CavityStateSpec {
    pub fn vacuum() -> Self {
        CavityStateSpec::Fock(0)
    }

    pub fn prepare(&self, dim: usize) -> Result<CMatrix> {
        prepare_cavity_state(self, dim)
    }
}

impl fmt::Display for CavityStateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CavityStateSpec::Coherent(a) if a.im == 0.0 => write!(f, "coherent:{}", a.re),
            CavityStateSpec::Coherent(a) => write!(f, "coherent:{},{}", a.re, a.im),
            CavityStateSpec::Fock(n) => write!(f, "fock:{n}"),
            CavityStateSpec::Thermal(nbar) => write!(f, "thermal:{nbar}"),
            CavityStateSpec::Custom(m) => write!(f, "custom:{}x{}", m.nrows(), m.ncols()),
        }
    }
}

impl FromStr for CavityStateSpec {
    type Err = Error;

    /// Accepts `coherent:RE`, `coherent:RE,IM`, `fock:N`, `thermal:NBAR`, `vacuum`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Config(format!("cavity spec {s:?}: {why}"));
        let s = s.trim();
        if s == "vacuum" {
            return Ok(CavityStateSpec::vacuum());
        }
        let (kind, arg) = s.split_once(':').ok_or_else(|| bad("expected KIND:VALUE"))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("not a number"));
        match kind {
            "coherent" => {
                let (re, im) = match arg.split_once(',') {
                    Some((re, im)) => (num(re)?, num(im)?),
                    None => (num(arg)?, 0.0),
                };
                Ok(CavityStateSpec::Coherent(C64::new(re, im)))
            }
            "fock" => arg
                .trim()
                .parse()
                .map(CavityStateSpec::Fock)
                .map_err(|_| bad("fock level must be a non-negative integer")),
            "thermal" => {
                let nbar = num(arg)?;
                if nbar < 0.0 || !nbar.is_finite() {
                    return Err(bad("mean photon number must be non-negative"));
                }
                Ok(CavityStateSpec::Thermal(nbar))
            }
            _ => Err(bad("unknown kind (coherent, fock, thermal, vacuum)")),
        }
    }
}

pub fn prepare_cavity_state(spec: &CavityStateSpec, dim: usize) -> Result<CMatrix> {
    prepare_cavity_state_with_threshold(spec, dim, DEFAULT_TAIL_THRESHOLD)
}

/// Builds the cavity density matrix, rejecting truncations that discard more
/// than `tail_threshold` of the probability. Truncated states are
/// renormalized to unit trace.
pub fn prepare_cavity_state_with_threshold(
    spec: &CavityStateSpec,
    dim: usize,
    tail_threshold: f64,
) -> Result<CMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    match spec {
        CavityStateSpec::Coherent(alpha) => {
            let tail = coherent_tail_mass(alpha.norm_sqr(), dim);
            if tail > tail_threshold {
                return Err(Error::TruncationInsufficient { dim, tail, threshold: tail_threshold });
            }
            let mut amp = Vec::with_capacity(dim);
            let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
            amp.push(c);
            for n in 1..dim {
                c = c * alpha / (n as f64).sqrt();
                amp.push(c);
            }
            let norm: f64 = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in &mut amp {
                *z /= norm;
            }
            Ok(CMatrix::from_fn(dim, dim, |i, j| amp[i] * amp[j].conj()))
        }
        CavityStateSpec::Fock(n) => {
            if *n >= dim {
                return Err(Error::TruncationInsufficient { dim, tail: 1.0, threshold: tail_threshold });
            }
            let mut m = CMatrix::zeros(dim, dim);
            m[(*n, *n)] = ONE;
            Ok(m)
        }
        CavityStateSpec::Thermal(nbar) => {
            if *nbar < 0.0 || !nbar.is_finite() {
                return Err(Error::InvalidState(format!("thermal occupation {nbar} must be >= 0")));
            }
            let ratio = nbar / (nbar + 1.0);
            let tail = ratio.powi(dim as i32);
            if tail > tail_threshold {
                return Err(Error::TruncationInsufficient { dim, tail, threshold: tail_threshold });
            }
            let mut p: Vec<f64> = (0..dim).map(|n| ratio.powi(n as i32)).collect();
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= total);
            Ok(CMatrix::from_fn(dim, dim, |i, j| if i == j { C64::new(p[i], 0.0) } else { ZERO }))
        }
        CavityStateSpec::Custom(m) => {
            if m.shape() != (dim, dim) {
                return Err(Error::Shape(format!(
                    "custom cavity state is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            check_density_matrix(m)?;
            Ok(m.clone())
        }
    }
}

/// Poisson probability mass at or above `dim` for mean `mean`.
pub fn coherent_tail_mass(mean: f64, dim: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    // log-space recursion avoids underflow of exp(-|α|²) for large amplitudes
    let ln_mean = mean.ln();
    let mut ln_p = -mean;
    for n in 1..=dim {
        ln_p += ln_mean - (n as f64).ln();
    }
    let mut tail = 0.0;
    let mut n = dim;
    loop {
        let term = ln_p.exp();
        tail += term;
        n += 1;
        ln_p += ln_mean - (n as f64).ln();
        if (n as f64) > mean && (term < tail * 1e-17 || ln_p < -745.0) {
            break;
        }
    }
    tail
}

/// Checks Hermiticity, unit trace and positivity (within the module tolerances).
pub fn check_density_matrix(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidState(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(Error::InvalidState(format!("not Hermitian (defect {defect:.3e})")));
    }
    let tr = trace(m);
    if (tr - ONE).norm() > TRACE_TOL {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    // complex Cholesky in nalgebra never rejects, so factor the real
    // embedding [[Re, -Im], [Im, Re]], which has the same spectrum (doubled)
    let n = m.nrows();
    let embedded = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        let shift = if i == j { POSITIVITY_TOL } else { 0.0 };
        shift
            + match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
    });
    if Cholesky::new(embedded).is_none() {
        return Err(Error::InvalidState(format!("has an eigenvalue below -{POSITIVITY_TOL:.0e}")));
    }
    Ok(())
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `tr[ρ²]`
pub fn purity(m: &CMatrix) -> f64 {
    crate::linalg::trace_of_product(m, m).re
}

/// Separable joint state `ρ_q ⊗ ρ_c`.
pub fn tensor(qubit: &CMatrix, cavity: &CMatrix) -> Result<CMatrix> {
    if qubit.shape() != (2, 2) {
        return Err(Error::Shape(format!(
            "qubit state must be 2x2, got {}x{}",
            qubit.nrows(),
            qubit.ncols()
        )));
    }
    check_density_matrix(qubit)?;
    check_density_matrix(cavity)?;
    Ok(kron(qubit, cavity))
}

/// Reduced qubit state of a `2D × 2D` joint state.
pub fn partial_trace_cavity(joint: &CMatrix) -> Result<CMatrix> {
    let n = joint.nrows();
    if !joint.is_square() || !n.is_multiple_of(2) || n == 0 {
        return Err(Error::Shape(format!("joint state {}x{} is not 2D x 2D", joint.nrows(), joint.ncols())));
    }
    let d = n / 2;
    Ok(CMatrix::from_fn(2, 2, |a, b| (0..d).map(|k| joint[(a * d + k, b * d + k)]).sum()))
}

/// Reduced cavity state of a `2D × 2D` joint state.
pub fn partial_trace_qubit(joint: &CMatrix) -> Result<CMatrix> {
    let n = joint.nrows();
    if !joint.is_square() || !n.is_multiple_of(2) || n == 0 {
        return Err(Error::Shape(format!("joint state {}x{} is not 2D x 2D", joint.nrows(), joint.ncols())));
    }
    let d = n / 2;
    Ok(CMatrix::from_fn(d, d, |i, j| joint[(i, j)] + joint[(d + i, d + j)]))
}

/// `tr[state · op]`
pub fn expectation(op: &CMatrix, state: &CMatrix) -> Result<C64> {
    if op.shape() != state.shape() || !op.is_square() {
        return Err(Error::Shape(format!(
            "operator {}x{} vs state {}x{}",
            op.nrows(),
            op.ncols(),
            state.nrows(),
            state.ncols()
        )));
    }
    Ok(crate::linalg::trace_of_product(state, op))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, max_abs};
    use approx::assert_abs_diff_eq;

    #[test]
    fn ladder_operator_dim2() {
        let b = annihilation(2);
        assert_eq!(b[(0, 1)], ONE);
        assert_eq!(b.iter().filter(|z| **z != ZERO).count(), 1);
    }

    #[test]
    fn number_operator_diagonal() {
        let ops = build_operators(7).unwrap();
        for n in 0..7 {
            assert_eq!(ops.number[(n, n)], C64::new(n as f64, 0.0));
            assert_eq!(ops.number[(7 + n, 7 + n)], C64::new(n as f64, 0.0));
        }
        let bdb = &ops.b_dag * &ops.b;
        // √n·√n is not exact in floating point
        assert!(max_abs(&(bdb - &ops.number)) < 1e-14);
    }

    #[test]
    fn large_truncation_builds() {
        let ops = build_operators(400).unwrap();
        assert_eq!(ops.joint_dim(), 800);
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(matches!(build_operators(1), Err(Error::InvalidDimension(1))));
    }

    #[test]
    fn ladder_commutator_identity_off_corner() {
        let d = 9;
        let b = annihilation(d);
        let c = commutator(&b, &b.adjoint());
        for i in 0..d {
            for j in 0..d {
                let expected = if i != j {
                    ZERO
                } else if i == d - 1 {
                    C64::new(-((d - 1) as f64), 0.0)
                } else {
                    ONE
                };
                assert!((c[(i, j)] - expected).norm() < 1e-14, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn pauli_algebra_exact() {
        let s = pauli();
        let two_i = C64::new(0.0, 2.0);
        // ε_ijk with cyclic (i, j, k)
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let c = commutator(&s[i], &s[j]);
            assert_eq!(c, &s[k] * two_i);
        }
        let sp = sigma_plus();
        let half = C64::new(0.5, 0.0);
        assert_eq!(sp, (&s[0] + &s[1] * I) * half);
    }

    #[test]
    fn qubit_preparations() {
        let r3 = prepare_qubit_state(3).unwrap();
        assert_eq!(r3, CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]));
        let r1 = prepare_qubit_state(1).unwrap();
        assert!(r1.iter().all(|z| *z == C64::new(0.5, 0.0)));
        let r2 = prepare_qubit_state(2).unwrap();
        let h = C64::new(0.5, 0.0);
        assert_eq!(r2, CMatrix::from_row_slice(2, 2, &[h, C64::new(0.0, -0.5), C64::new(0.0, 0.5), h]));
        for k in 1..=3 {
            let r = prepare_qubit_state(k).unwrap();
            assert_eq!(expectation(&pauli()[k - 1], &r).unwrap(), ONE);
        }
        assert!(matches!(prepare_qubit_state(0), Err(Error::InvalidPreparation(0))));
        assert!(matches!(prepare_qubit_state(4), Err(Error::InvalidPreparation(4))));
    }

    #[test]
    fn coherent_state_mean_photon_number() {
        let rho = prepare_cavity_state(&CavityStateSpec::Coherent(ONE), 50).unwrap();
        let n = expectation(&number(50), &rho).unwrap();
        assert_abs_diff_eq!(n.re, 1.0, epsilon = 1e-10);
        check_density_matrix(&rho).unwrap();
    }

    #[test]
    fn coherent_truncation_rejected() {
        let err = prepare_cavity_state(&CavityStateSpec::Coherent(C64::new(3.0, 0.0)), 10).unwrap_err();
        assert!(matches!(err, Error::TruncationInsufficient { .. }));
    }

    #[test]
    fn tail_mass_matches_direct_sum() {
        // 1 - Σ_{n<D} p_n by direct summation, mean 1, D = 8
        let mut p = (-1.0_f64).exp();
        let mut head = p;
        for n in 1..8 {
            p /= n as f64;
            head += p;
        }
        assert_abs_diff_eq!(coherent_tail_mass(1.0, 8), 1.0 - head, epsilon = 1e-15);
    }

    #[test]
    fn vacuum_has_zero_quadrature() {
        let rho = prepare_cavity_state(&CavityStateSpec::vacuum(), 5).unwrap();
        let b = annihilation(5);
        let x = &b + b.adjoint();
        assert_eq!(expectation(&x, &rho).unwrap(), ZERO);
    }

    #[test]
    fn thermal_boltzmann_ratio() {
        let rho = prepare_cavity_state(&CavityStateSpec::Thermal(0.5), 40).unwrap();
        for n in 0..10 {
            assert_abs_diff_eq!(rho[(n + 1, n + 1)].re / rho[(n, n)].re, 1.0 / 3.0, epsilon = 1e-12);
        }
        check_density_matrix(&rho).unwrap();
    }

    #[test]
    fn fock_level_must_fit() {
        assert!(prepare_cavity_state(&CavityStateSpec::Fock(5), 5).is_err());
        assert!(prepare_cavity_state(&CavityStateSpec::Fock(4), 5).is_ok());
    }

    #[test]
    fn custom_state_validated() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        let err = prepare_cavity_state(&CavityStateSpec::Custom(m), 3).unwrap_err();
        assert!(matches!(err, Error::InvalidState(_)));
    }

    #[test]
    fn cavity_spec_parsing() {
        assert_eq!("coherent:1.0".parse::<CavityStateSpec>().unwrap(), CavityStateSpec::Coherent(ONE));
        assert_eq!("coherent:0,1".parse::<CavityStateSpec>().unwrap(), CavityStateSpec::Coherent(I));
        assert_eq!("fock:2".parse::<CavityStateSpec>().unwrap(), CavityStateSpec::Fock(2));
        assert_eq!("thermal:0.5".parse::<CavityStateSpec>().unwrap(), CavityStateSpec::Thermal(0.5));
        assert_eq!("vacuum".parse::<CavityStateSpec>().unwrap(), CavityStateSpec::Fock(0));
        assert!("squeezed:1".parse::<CavityStateSpec>().is_err());
        assert!("thermal:-1".parse::<CavityStateSpec>().is_err());
        let spec = CavityStateSpec::Coherent(C64::new(0.5, -0.25));
        assert_eq!(spec.to_string().parse::<CavityStateSpec>().unwrap(), spec);
    }

    #[test]
    fn tensor_of_excited_and_vacuum() {
        let q = prepare_qubit_state(3).unwrap();
        let c = prepare_cavity_state(&CavityStateSpec::vacuum(), 4).unwrap();
        let joint = tensor(&q, &c).unwrap();
        assert_eq!(joint[(0, 0)], ONE);
        assert_eq!(joint.iter().filter(|z| **z != ZERO).count(), 1);
    }

    #[test]
    fn tensor_rejects_non_density_inputs() {
        let q = CMatrix::identity(2, 2);
        let c = prepare_cavity_state(&CavityStateSpec::vacuum(), 4).unwrap();
        assert!(matches!(tensor(&q, &c), Err(Error::InvalidState(_))));
    }

    #[test]
    fn separable_round_trip() {
        let c = prepare_cavity_state(&CavityStateSpec::Coherent(ONE), 30).unwrap();
        for k in 1..=3 {
            let q = prepare_qubit_state(k).unwrap();
            let joint = tensor(&q, &c).unwrap();
            let back = partial_trace_cavity(&joint).unwrap();
            assert!(max_abs(&(back - &q)) < 1e-15);
            assert_abs_diff_eq!(trace(&joint).re, 1.0, epsilon = 1e-12);
            let cav = partial_trace_qubit(&joint).unwrap();
            assert!(max_abs(&(cav - &c)) < 1e-15);
        }
    }

    #[test]
    fn bell_like_state_reduces_to_maximally_mixed() {
        // (|↑,0⟩ + |↓,1⟩)/√2 with D = 2
        let mut psi = [ZERO; 4];
        psi[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        psi[3] = psi[0];
        let joint = CMatrix::from_fn(4, 4, |i, j| psi[i] * psi[j].conj());
        let red = partial_trace_cavity(&joint).unwrap();
        let half = C64::new(0.5, 0.0);
        assert!(max_abs(&(red - CMatrix::from_row_slice(2, 2, &[half, ZERO, ZERO, half]))) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_odd_dimension() {
        assert!(matches!(partial_trace_cavity(&CMatrix::identity(3, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn expectation_values() {
        let r3 = prepare_qubit_state(3).unwrap();
        assert_eq!(expectation(&pauli()[2], &r3).unwrap(), ONE);
        let rho = prepare_cavity_state(&CavityStateSpec::Coherent(ONE), 40).unwrap();
        let b = annihilation(40);
        let x = &b + b.adjoint();
        assert_abs_diff_eq!(expectation(&x, &rho).unwrap().re, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(expectation(&(&x * &x), &rho).unwrap().re, 5.0, epsilon = 1e-10);
        assert!(matches!(expectation(&x, &r3), Err(Error::Shape(_))));
    }
}
