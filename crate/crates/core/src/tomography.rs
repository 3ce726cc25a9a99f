//! Qubit process-tomography time series `c_i^(k)(t) = tr[ρ_t^(k) σ_i]`.
//!
//! Series are indexed `[i][k]` with `i` the measured Pauli operator and `k`
//! the `σ_k = +1` preparation, both zero-based in code (`series[0][1]` is
//! `c₁^(2)`).

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{DispersiveParams, HamiltonianParams, MultimodeParams, Propagator};
use crate::error::{Error, Result};
use crate::linalg::{kron, trace, trace_of_product, CMatrix, C64};
use crate::quantum::{check_density_matrix, pauli, prepare_qubit_state};

pub mod io;

pub use io::{read_record, write_record, RecordFormat};

pub type Series = [[Vec<f64>; 3]; 3];

/// Which Hamiltonian produced a synthetic record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum SystemSpec {
    JaynesCummings(HamiltonianParams),
    Dispersive(DispersiveParams),
    Multimode(MultimodeParams),
}

impl SystemSpec {
    pub fn qubit_splitting(&self) -> f64 {
        match self {
            SystemSpec::JaynesCummings(p) => p.a,
            SystemSpec::Dispersive(p) => p.a,
            SystemSpec::Multimode(p) => p.a,
        }
    }

    /// Effective coupling seen by the second-order estimator.
    pub fn coupling(&self) -> f64 {
        match self {
            SystemSpec::JaynesCummings(p) => p.g,
            SystemSpec::Dispersive(p) => p.g,
            SystemSpec::Multimode(p) => p.coupling_norm_sq().sqrt(),
        }
    }

    /// Cavity frequency when it is a single number.
    pub fn cavity_frequency(&self) -> Option<f64> {
        match self {
            SystemSpec::JaynesCummings(p) => Some(p.omega),
            SystemSpec::Dispersive(p) => Some(p.omega),
            SystemSpec::Multimode(p) => {
                let first = p.modes.first()?.omega;
                p.modes.iter().all(|m| m.omega == first).then_some(first)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    #[default]
    None,
    AdditiveGaussian {
        sigma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub model: NoiseModel,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        NoiseSpec { model: NoiseModel::AdditiveGaussian { sigma }, seed }
    }

    pub fn sigma(&self) -> f64 {
        match self.model {
            NoiseModel::None => 0.0,
            NoiseModel::AdditiveGaussian { sigma } => sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RecordMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<String>,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub grid_spacing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRecord {
    pub times: Vec<f64>,
    pub series: Series,
    pub meta: RecordMeta,
}

impl TomographyRecord {
    /// Validates the grid and series lengths and fills in the grid spacing.
    pub fn new(times: Vec<f64>, series: Series, mut meta: RecordMeta) -> Result<Self> {
        let origin = validate_grid(&times).map_err(Error::Schema)?;
        for (i, row) in series.iter().enumerate() {
            for (k, s) in row.iter().enumerate() {
                if s.len() != times.len() {
                    return Err(Error::Schema(format!(
                        "series {} has {} points but the grid has {}",
                        column_name(i, k),
                        s.len(),
                        times.len()
                    )));
                }
            }
        }
        meta.grid_spacing = times
            .get(origin + 1)
            .map(|t| t - times[origin])
            .or_else(|| origin.checked_sub(1).map(|j| times[origin] - times[j]))
            .unwrap_or(0.0);
        Ok(TomographyRecord { times, series, meta })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the `t = 0` sample.
    pub fn origin(&self) -> usize {
        self.times.iter().position(|&t| t == 0.0).expect("validated grid contains t = 0")
    }

    pub fn has_negative_times(&self) -> bool {
        self.times.first().is_some_and(|&t| t < 0.0)
    }

    /// The 3×3 slice `c_i^(k)(t_j)`.
    pub fn slice(&self, j: usize) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|k| self.series[i][k][j]))
    }

    /// Index of a grid point within `1e-9 δ` of `t`.
    pub fn find_time(&self, t: f64, scale: f64) -> Option<usize> {
        let tol = 1e-9 * scale.abs().max(f64::MIN_POSITIVE);
        let pos = self.times.partition_point(|&x| x < t - tol);
        (pos < self.times.len() && (self.times[pos] - t).abs() <= tol).then_some(pos)
    }
}

/// Column label `c{i}{k}` (one-based, Pauli first).
pub fn column_name(i: usize, k: usize) -> String {
    format!("c{}{}", i + 1, k + 1)
}

fn validate_grid(times: &[f64]) -> std::result::Result<usize, String> {
    if times.is_empty() {
        return Err("time grid is empty".into());
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err("time grid contains non-finite values".into());
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err("time grid must be strictly ascending".into());
    }
    times.iter().position(|&t| t == 0.0).ok_or_else(|| "time grid must contain t = 0".into())
}

/// `t_j = j δ` for `j = 0..steps`.
pub fn uniform_grid(delta: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|j| j as f64 * delta).collect()
}

/// `t_j = j δ` for `j = -(steps-1)..=(steps-1)`; needed only by central stencils.
pub fn symmetric_grid(delta: f64, steps: usize) -> Vec<f64> {
    let m = steps.saturating_sub(1) as i64;
    (-m..=m).map(|j| j as f64 * delta).collect()
}

/// Precomputed eigenbasis data for evaluating all nine series at any time.
///
/// With `H = V E V†`, each series is
/// `c(t) = Σ_mn R_mn S_nm e^{−i(E_m − E_n)t}` where `R = V† η₀ V` and
/// `S = V† σ V`, so a time point costs `O(n²)` per series.
#[derive(Debug, Clone)]
pub struct TimeSeriesGenerator {
    prop: Propagator,
    states: [CMatrix; 3],
    paulis_t: [CMatrix; 3],
    /// `t = 0` values from the original basis, free of eigenbasis rounding.
    initial: [[f64; 3]; 3],
}

impl TimeSeriesGenerator {
    pub fn new(h: &CMatrix, cavity: &CMatrix) -> Result<Self> {
        Self::with_propagator(Propagator::new(h)?, cavity)
    }

    pub fn with_propagator(prop: Propagator, cavity: &CMatrix) -> Result<Self> {
        if 2 * cavity.nrows() != prop.dim() || !cavity.is_square() {
            return Err(Error::Shape(format!(
                "cavity state {}x{} does not fit a hamiltonian of dimension {}",
                cavity.nrows(),
                cavity.ncols(),
                prop.dim()
            )));
        }
        check_density_matrix(cavity)?;
        let eig = prop.eigen();
        let id_c = CMatrix::identity(cavity.nrows(), cavity.nrows());
        let states = [1, 2, 3].map(|k| {
            let q = prepare_qubit_state(k).expect("k in range");
            eig.to_eigenbasis(&kron(&q, cavity))
        });
        let paulis_t = pauli().map(|s| eig.to_eigenbasis(&kron(&s, &id_c)).transpose());
        // tr[(ρ_k ⊗ ρ_c)(σ_i ⊗ 1)] = tr[ρ_k σ_i] tr[ρ_c]
        let tr_c = trace(cavity).re;
        let sigmas = pauli();
        let initial = std::array::from_fn(|i| {
            std::array::from_fn(|k| {
                let q = prepare_qubit_state(k + 1).expect("k in range");
                trace_of_product(&q, &sigmas[i]).re * tr_c
            })
        });
        Ok(TimeSeriesGenerator { prop, states, paulis_t, initial })
    }

    /// All nine `c_i^(k)(t)`, indexed `[i][k]`.
    pub fn sample(&self, t: f64) -> [[f64; 3]; 3] {
        if t == 0.0 {
            return self.initial;
        }
        let ph = self.prop.eigen().phases(t);
        let n = self.prop.dim();
        let rotated: Vec<DMatrix<C64>> = self
            .states
            .iter()
            .map(|r| DMatrix::from_fn(n, n, |m, q| r[(m, q)] * ph[m] * ph[q].conj()))
            .collect();
        std::array::from_fn(|i| {
            std::array::from_fn(|k| {
                rotated[k].iter().zip(self.paulis_t[i].iter()).map(|(z, s)| z * s).sum::<C64>().re
            })
        })
    }

    pub fn record(&self, times: &[f64]) -> Result<TomographyRecord> {
        validate_grid(times).map_err(Error::Schema)?;
        let samples = self.sample_all(times);
        let series: Series =
            std::array::from_fn(|i| std::array::from_fn(|k| samples.iter().map(|s| s[i][k]).collect()));
        TomographyRecord::new(times.to_vec(), series, RecordMeta::default())
    }

    #[cfg(feature = "parallel")]
    fn sample_all(&self, times: &[f64]) -> Vec<[[f64; 3]; 3]> {
        use rayon::prelude::*;
        times.par_iter().map(|&t| self.sample(t)).collect()
    }

    #[cfg(not(feature = "parallel"))]
    fn sample_all(&self, times: &[f64]) -> Vec<[[f64; 3]; 3]> {
        times.iter().map(|&t| self.sample(t)).collect()
    }
}

/// Nine tomography series for the joint Hamiltonian `h` and initial cavity
/// state `cavity`, sampled on `times`.
pub fn generate_time_series(h: &CMatrix, cavity: &CMatrix, times: &[f64]) -> Result<TomographyRecord> {
    TimeSeriesGenerator::new(h, cavity)?.record(times)
}

/// Adds i.i.d. Gaussian noise to every sample. Deterministic for a fixed seed.
pub fn add_noise(rec: &TomographyRecord, spec: &NoiseSpec) -> Result<TomographyRecord> {
    let sigma = spec.sigma();
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidSpec(format!("noise sigma {sigma} must be finite and >= 0")));
    }
    if sigma == 0.0 {
        return Ok(rec.clone());
    }
    let dist = Normal::new(0.0, sigma).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = rec.clone();
    for row in out.series.iter_mut() {
        for s in row.iter_mut() {
            for x in s.iter_mut() {
                *x += dist.sample(&mut rng);
            }
        }
    }
    out.meta.noise = *spec;
    Ok(out)
}
