//! A physical setup (Hamiltonian + initial cavity state) and its ground truth.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    build_dispersive_hamiltonian, build_jc_hamiltonian, build_multimode_jc, product_state,
};
use crate::error::Result;
use crate::estimator::{DerivativeSet, VarianceMatrix};
use crate::linalg::CMatrix;
use crate::oracle::{cavity_moments, exact_derivatives};
use crate::quantum::CavityStateSpec;
use crate::tomography::{RecordMeta, SystemSpec, TimeSeriesGenerator, TomographyRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: SystemSpec,
    /// Initial state of every cavity mode.
    pub cavity: CavityStateSpec,
}

/// Exact values the estimators should recover.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Truth {
    pub a: f64,
    /// `√(Σ g_i²)` for several modes.
    pub g: f64,
    pub omega: Option<f64>,
    pub x_mean: Option<f64>,
    pub p_mean: Option<f64>,
    pub variance: Option<VarianceMatrix>,
    pub n_mean: Option<f64>,
    pub n_var: Option<f64>,
}

impl Scenario {
    pub fn new(system: SystemSpec, cavity: CavityStateSpec) -> Self {
        Scenario { system, cavity }
    }

    pub fn hamiltonian(&self) -> Result<CMatrix> {
        match &self.system {
            SystemSpec::JaynesCummings(p) => build_jc_hamiltonian(p),
            SystemSpec::Dispersive(p) => build_dispersive_hamiltonian(p),
            SystemSpec::Multimode(p) => build_multimode_jc(p),
        }
    }

    /// Mode dimensions, in tensor order.
    pub fn mode_dims(&self) -> Vec<usize> {
        match &self.system {
            SystemSpec::JaynesCummings(p) => vec![p.dim_cavity],
            SystemSpec::Dispersive(p) => vec![p.dim_cavity],
            SystemSpec::Multimode(p) => p.modes.iter().map(|m| m.dim).collect(),
        }
    }

    /// Initial cavity state over all modes.
    pub fn cavity_state(&self) -> Result<CMatrix> {
        let states =
            self.mode_dims().into_iter().map(|d| self.cavity.prepare(d)).collect::<Result<Vec<_>>>()?;
        Ok(match states.len() {
            1 => states.into_iter().next().expect("one mode"),
            _ => product_state(&states),
        })
    }

    pub fn generator(&self) -> Result<TimeSeriesGenerator> {
        TimeSeriesGenerator::new(&self.hamiltonian()?, &self.cavity_state()?)
    }

    pub fn meta(&self) -> RecordMeta {
        RecordMeta {
            system: Some(self.system.clone()),
            cavity: Some(self.cavity.to_string()),
            ..Default::default()
        }
    }

    /// Noiseless record on `times`, with metadata attached.
    pub fn simulate_with(&self, generator: &TimeSeriesGenerator, times: &[f64]) -> Result<TomographyRecord> {
        let mut rec = generator.record(times)?;
        let spacing = rec.meta.grid_spacing;
        rec.meta = RecordMeta { grid_spacing: spacing, ..self.meta() };
        Ok(rec)
    }

    pub fn simulate(&self, times: &[f64]) -> Result<TomographyRecord> {
        self.simulate_with(&self.generator()?, times)
    }

    pub fn exact_derivatives(&self) -> Result<DerivativeSet> {
        exact_derivatives(&self.hamiltonian()?, &self.cavity_state()?)
    }

    pub fn truth(&self) -> Result<Truth> {
        let single = self.cavity.prepare(self.mode_dims()[0])?;
        let m = cavity_moments(&single)?;
        let (x, p) = m.quadrature_means();
        let mut truth = Truth {
            a: self.system.qubit_splitting(),
            g: self.system.coupling(),
            omega: self.system.cavity_frequency(),
            n_mean: Some(m.n_mean),
            n_var: Some(m.photon_variance()),
            ..Default::default()
        };
        // per-mode moments only describe the whole cavity for a single mode
        if !matches!(self.system, SystemSpec::Multimode(ref p) if p.modes.len() > 1) {
            truth.x_mean = Some(x);
            truth.p_mean = Some(p);
            truth.variance = Some(m.variance_matrix());
        }
        Ok(truth)
    }
}
