//! JSON-in, JSON-out operations behind the browser exports.

use jc_probe::dynamics::{DispersiveParams, HamiltonianParams};
use jc_probe::estimator::KnownCoupling;
use jc_probe::sweep::{grid_for, log_log_slope, run_sweep, SweepRow, SweepSpec};
use jc_probe::tomography::io::to_json_string;
use jc_probe::tomography::{add_noise, NoiseSpec, SystemSpec};
use jc_probe::{estimate_record, EstimateOptions, EstimateReport, Scenario, Stencil, Truth};
use serde::{Deserialize, Serialize};

/// Browser-side cap on the Fock truncation; the page runs single-threaded.
pub const MAX_DIM: usize = 120;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    pub a: f64,
    pub omega: f64,
    pub g: f64,
    pub cavity: String,
    pub dim: usize,
    pub dispersive: bool,
    pub delta: f64,
    pub steps: usize,
    pub stencil: Option<Stencil>,
    pub noise_sigma: f64,
    pub seed: u64,
    pub deltas: Vec<f64>,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            a: 1.0,
            omega: 1.0,
            g: 1.0,
            cavity: "coherent:1.0".into(),
            dim: 30,
            dispersive: false,
            delta: 0.01,
            steps: 200,
            stencil: None,
            noise_sigma: 0.0,
            seed: 0,
            deltas: vec![0.04, 0.02, 0.01, 0.005],
        }
    }
}

impl DemoConfig {
    fn parse(json: &str) -> Result<Self, String> {
        let cfg: DemoConfig = serde_json::from_str(json).map_err(|e| format!("config: {e}"))?;
        if cfg.dim > MAX_DIM {
            return Err(format!("dim: at most {MAX_DIM} in the browser"));
        }
        Ok(cfg)
    }

    fn scenario(&self) -> Result<Scenario, String> {
        let system = if self.dispersive {
            SystemSpec::Dispersive(DispersiveParams::new(self.a, self.omega, self.g, self.dim))
        } else {
            SystemSpec::JaynesCummings(HamiltonianParams::new(self.a, self.omega, self.g, self.dim))
        };
        let cavity = self.cavity.parse().map_err(|e: jc_probe::Error| e.to_string())?;
        let sc = Scenario::new(system, cavity);
        // surface physics errors (detuning, truncation) before any sampling
        sc.hamiltonian().map_err(describe)?;
        sc.cavity_state().map_err(describe)?;
        Ok(sc)
    }

    fn stencil(&self) -> Stencil {
        self.stencil.unwrap_or(if self.dispersive { Stencil::Forward4 } else { Stencil::Forward2 })
    }

    fn noise(&self) -> NoiseSpec {
        NoiseSpec::gaussian(self.noise_sigma, self.seed)
    }

    fn options(&self) -> EstimateOptions {
        EstimateOptions {
            dispersive: self.dispersive.then_some(KnownCoupling {
                a: self.a,
                g: self.g,
                detuning: self.a - self.omega,
            }),
            ..Default::default()
        }
    }
}

fn describe(e: jc_probe::Error) -> String {
    format!("{}: {e}", e.kind())
}

/// Tomography record on `steps` points of spacing `delta`, in the record JSON format.
pub fn simulate_series(config: &str) -> Result<String, String> {
    let cfg = DemoConfig::parse(config)?;
    let sc = cfg.scenario()?;
    let rec = sc.simulate(&grid_for(cfg.stencil(), cfg.delta, cfg.steps)).map_err(describe)?;
    Ok(to_json_string(&add_noise(&rec, &cfg.noise()).map_err(describe)?))
}

#[derive(Serialize)]
struct EstimateResponse {
    report: EstimateReport,
    truth: Truth,
}

/// Simulates just the stencil nodes and runs the estimator.
pub fn estimate(config: &str) -> Result<String, String> {
    let cfg = DemoConfig::parse(config)?;
    let sc = cfg.scenario()?;
    let stencil = cfg.stencil();
    let rec =
        sc.simulate(&grid_for(stencil, cfg.delta, stencil.max_offset() as usize + 1)).map_err(describe)?;
    let rec = add_noise(&rec, &cfg.noise()).map_err(describe)?;
    let report = estimate_record(&rec, stencil, cfg.delta, &cfg.options()).map_err(describe)?;
    let truth = sc.truth().map_err(describe)?;
    Ok(serde_json::to_string(&EstimateResponse { report, truth }).expect("serializable"))
}

#[derive(Serialize)]
struct SweepResponse {
    rows: Vec<SweepRow>,
    slope: Option<f64>,
}

/// Estimator over `deltas`, with the fitted log-log slope of the largest
/// parameter error.
pub fn sweep(config: &str) -> Result<String, String> {
    let cfg = DemoConfig::parse(config)?;
    let sc = cfg.scenario()?;
    let mut spec = SweepSpec::new(cfg.deltas.clone(), cfg.stencil());
    spec.noise = cfg.noise();
    spec.options = cfg.options();
    let rows = run_sweep(&sc, &spec).map_err(describe)?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.report.is_some() && r.errors.max_parameter() > 0.0)
        .map(|r| (r.delta, r.errors.max_parameter()))
        .collect();
    let slope = (pts.len() >= 2).then(|| log_log_slope(&pts));
    Ok(serde_json::to_string(&SweepResponse { rows, slope }).expect("serializable"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn simulate_returns_record_json() {
        let out = simulate_series(r#"{"dim": 20, "steps": 5}"#).unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["times"].as_array().unwrap().len(), 5);
        assert_eq!(v["series"]["c33"][0].as_f64(), Some(1.0));
    }

    #[test]
    fn estimate_recovers_s1() {
        let out = estimate(r#"{"dim": 40}"#).unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        let g = v["report"]["g_hat"].as_f64().unwrap();
        assert!((g - 1.0).abs() < 0.02, "{g}");
        assert_eq!(v["truth"]["g"].as_f64(), Some(1.0));
    }

    #[test]
    fn dispersive_defaults_to_fourth_order() {
        let cfg = r#"{"dispersive": true, "omega": 3.0, "g": 0.1, "cavity": "fock:2", "dim": 20}"#;
        let v: Value = serde_json::from_str(&estimate(cfg).unwrap()).unwrap();
        assert_eq!(v["report"]["stencil"], "forward4");
        assert!((v["report"]["n_mean"].as_f64().unwrap() - 2.0).abs() < 0.05);
    }

    #[test]
    fn sweep_reports_slope() {
        let v: Value = serde_json::from_str(&sweep(r#"{"dim": 40}"#).unwrap()).unwrap();
        let slope = v["slope"].as_f64().unwrap();
        assert!((1.8..=2.2).contains(&slope), "{slope}");
        assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn errors_are_messages() {
        assert!(simulate_series(r#"{"dimm": 3}"#).unwrap_err().contains("dimm"));
        assert!(estimate(r#"{"dispersive": true}"#).unwrap_err().starts_with("detuning-zero"));
        assert!(simulate_series(r#"{"dim": 100000}"#).is_err());
    }
}
