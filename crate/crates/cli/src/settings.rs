//! Run settings from flags and an optional TOML file, and their resolution
//! into typed inputs for the commands.
//!
//! Every setting can come from a flag or from the config file under the same
//! name (`noise-sigma = 1e-3`). Values in the file take precedence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use jc_probe::dynamics::{DispersiveParams, HamiltonianParams, Mode, MultimodeParams, DEFAULT_DIM_CAP};
use jc_probe::tomography::{NoiseSpec, RecordFormat, SystemSpec};
use jc_probe::{CavityStateSpec, Error, Result, Scenario, Stencil};
use serde::Deserialize;

pub const DIM_CAP_VAR: &str = "JC_PROBE_DIM_CAP";

const DEFAULT_DIM: usize = 400;
const DEFAULT_MULTIMODE_DIM: usize = 20;
const DEFAULT_DELTA: f64 = 0.01;
const DEFAULT_SWEEP: [f64; 4] = [0.04, 0.02, 0.01, 0.005];
const DEFAULT_SIM_STEPS: usize = 101;

/// A number or a comma-separated list of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("{v:?} is not a number")))
            .collect::<std::result::Result<_, _>>()
            .map(FloatList)
    }
}

impl fmt::Display for FloatList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(f64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl<'de> Deserialize<'de> for FloatList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(f64),
            Int(i64),
            Many(Vec<f64>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(v) => Ok(FloatList(vec![v])),
            Raw::Int(v) => Ok(FloatList(vec![v as f64])),
            Raw::Many(v) => Ok(FloatList(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for RecordFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => RecordFormat::Csv,
            FormatArg::Json => RecordFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Qubit splitting a
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Cavity frequency; comma-separated for several modes
    #[arg(long)]
    pub omega: Option<FloatList>,
    /// Coupling strength; comma-separated for several modes
    #[arg(long)]
    pub g: Option<FloatList>,
    /// Initial cavity state of every mode: coherent:RE[,IM], fock:N, thermal:NBAR or vacuum
    #[arg(long)]
    pub cavity: Option<String>,
    /// Fock-space truncation per mode
    #[arg(long)]
    pub dim: Option<usize>,
    /// Number of cavity modes
    #[arg(long)]
    pub modes: Option<usize>,
    /// Use the dispersive Hamiltonian (simulate) or the dispersive inversion (estimate, sweep)
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub dispersive: Option<bool>,
    /// Grid spacing; a comma-separated list for sweep and oracle-check
    #[arg(long)]
    pub delta: Option<FloatList>,
    /// Grid points from t = 0 onward
    #[arg(long)]
    pub steps: Option<usize>,
    /// Finite-difference stencil: forward2, central2 or forward4
    #[arg(long)]
    pub stencil: Option<Stencil>,
    /// Standard deviation of additive Gaussian noise on every sample
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Noise seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sweep: derive every step size from one fine grid
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub subsample: Option<bool>,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record format for simulate (default: from the --out extension, else csv)
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Record to analyse (estimate only; also accepted as a positional argument)
    #[arg(skip)]
    #[serde(default)]
    pub input: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        Settings { $($field: $top.$field.or($base.$field)),* }
    };
}

impl Settings {
    pub fn from_toml(text: &str, path: &Path) -> Result<Settings> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn load(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Settings::from_toml(&text, path)
    }

    /// `file` values win over `self`.
    pub fn overlaid_with(self, file: Settings) -> Settings {
        overlay!(
            self,
            file,
            a,
            omega,
            g,
            cavity,
            dim,
            modes,
            dispersive,
            delta,
            steps,
            stencil,
            noise_sigma,
            seed,
            subsample,
            out,
            format,
            input
        )
    }

    pub fn dispersive(&self) -> bool {
        self.dispersive.unwrap_or(false)
    }

    pub fn subsample(&self) -> bool {
        self.subsample.unwrap_or(false)
    }

    pub fn stencil_or(&self, default: Stencil) -> Stencil {
        self.stencil.unwrap_or(default)
    }

    pub fn cavity_spec(&self) -> Result<CavityStateSpec> {
        match &self.cavity {
            None => Ok(CavityStateSpec::Coherent(jc_probe::C64::new(1.0, 0.0))),
            Some(s) => s.parse().map_err(|e: Error| field("cavity", &e.to_string())),
        }
    }

    /// Single grid spacing.
    pub fn delta(&self) -> Result<Option<f64>> {
        match &self.delta {
            None => Ok(None),
            Some(FloatList(v)) if v.len() == 1 => positive("delta", v[0]).map(Some),
            Some(_) => Err(field("delta", "expected a single step size")),
        }
    }

    pub fn delta_or_default(&self) -> Result<f64> {
        Ok(self.delta()?.unwrap_or(DEFAULT_DELTA))
    }

    /// Step sizes for sweeps; defaults to `0.04, 0.02, 0.01, 0.005`.
    pub fn deltas(&self) -> Result<Vec<f64>> {
        let v = self.delta.as_ref().map_or_else(|| DEFAULT_SWEEP.to_vec(), |l| l.0.clone());
        if v.is_empty() {
            return Err(field("delta", "at least one step size is required"));
        }
        v.into_iter().map(|d| positive("delta", d)).collect()
    }

    pub fn steps_or(&self, default: usize) -> Result<usize> {
        match self.steps {
            Some(0) => Err(field("steps", "must be at least 1")),
            Some(n) => Ok(n),
            None => Ok(default),
        }
    }

    pub fn simulate_steps(&self, stencil: Stencil) -> Result<usize> {
        self.steps_or(DEFAULT_SIM_STEPS.max(stencil.max_offset() as usize + 1))
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        let sigma = self.noise_sigma.unwrap_or(0.0);
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(field("noise-sigma", "must be a non-negative number"));
        }
        let seed = self.seed.unwrap_or(0);
        Ok(if sigma > 0.0 {
            NoiseSpec::gaussian(sigma, seed)
        } else {
            NoiseSpec { seed, ..NoiseSpec::default() }
        })
    }

    pub fn format_for(&self, path: Option<&Path>) -> RecordFormat {
        match (self.format, path) {
            (Some(f), _) => f.into(),
            (None, Some(p)) => RecordFormat::from_path(p),
            (None, None) => RecordFormat::Csv,
        }
    }

    /// Builds the physical setup from the Hamiltonian and cavity settings.
    pub fn scenario(&self) -> Result<Scenario> {
        let omegas = self.omega.as_ref().map_or_else(|| vec![1.0], |l| l.0.clone());
        let gs = self.g.as_ref().map_or_else(|| vec![1.0], |l| l.0.clone());
        let n = match self.modes {
            Some(0) => return Err(field("modes", "must be at least 1")),
            Some(n) => n,
            None => omegas.len().max(gs.len()),
        };
        let omegas = broadcast("omega", omegas, n)?;
        let gs = broadcast("g", gs, n)?;
        let a = self.a.unwrap_or(1.0);
        finite("a", a)?;
        for &w in &omegas {
            finite("omega", w)?;
        }
        for &g in &gs {
            finite("g", g)?;
            if g < 0.0 {
                return Err(field("g", "coupling must be non-negative"));
            }
        }
        let dim = self.dim.unwrap_or(if n == 1 { DEFAULT_DIM } else { DEFAULT_MULTIMODE_DIM });
        if dim < 2 {
            return Err(field("dim", "must be at least 2"));
        }
        let cap = dim_cap()?;
        let total = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(dim)).unwrap_or(usize::MAX);
        if total > cap {
            return Err(Error::Capacity { requested: total, cap });
        }

        let system = if self.dispersive() {
            if n > 1 {
                return Err(field("dispersive", "the dispersive model has a single mode"));
            }
            SystemSpec::Dispersive(DispersiveParams::new(a, omegas[0], gs[0], dim))
        } else if n == 1 {
            SystemSpec::JaynesCummings(HamiltonianParams::new(a, omegas[0], gs[0], dim))
        } else {
            let modes = omegas.iter().zip(&gs).map(|(&omega, &g)| Mode { omega, g, dim }).collect();
            SystemSpec::Multimode(MultimodeParams::new(a, modes).with_cap(cap))
        };
        Ok(Scenario::new(system, self.cavity_spec()?))
    }

    /// Whether any Hamiltonian parameter was given explicitly.
    pub fn has_physics(&self) -> bool {
        self.a.is_some() || self.omega.is_some() || self.g.is_some()
    }
}

pub fn dim_cap() -> Result<usize> {
    match std::env::var(DIM_CAP_VAR) {
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_DIM_CAP),
        Err(e) => Err(Error::Config(format!("{DIM_CAP_VAR}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(c) if c >= 2 => Ok(c),
            _ => Err(Error::Config(format!("{DIM_CAP_VAR}={v:?}: expected an integer of at least 2"))),
        },
    }
}

fn field(name: &str, why: &str) -> Error {
    Error::Config(format!("{name}: {why}"))
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(field(name, "must be finite"))
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(field(name, &format!("{v} is not a positive step size")))
    }
}

fn broadcast(name: &str, v: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        len if len == n => Ok(v),
        len => Err(field(name, &format!("{len} values given for {n} modes"))),
    }
}
