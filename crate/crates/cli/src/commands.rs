use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use jc_probe::estimator::{finite_difference_derivatives, KnownCoupling, Tensor3};
use jc_probe::oracle::cavity_moments;
use jc_probe::oracle::CavityMoments;
use jc_probe::sweep::{grid_for, log_log_slope, run_sweep, sweep_to_csv, SweepRow, SweepSpec};
use jc_probe::tomography::io::{to_csv_string, to_json_string};
use jc_probe::tomography::{
    add_noise, read_record, write_record, RecordFormat, SystemSpec, TomographyRecord,
};
use jc_probe::{estimate_record, Error, EstimateOptions, Result, Scenario, Stencil};
use serde::Serialize;

use crate::report;
use crate::settings::Settings;

pub const EXIT_ESTIMATION: u8 = 4;

/// Writes machine-readable output to `path`, or stdout without one.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io { path: p.into(), source }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

fn describe(scenario: &Scenario) -> String {
    let dims = scenario.mode_dims();
    let system = match &scenario.system {
        SystemSpec::JaynesCummings(p) => format!("jaynes-cummings a={} omega={} g={}", p.a, p.omega, p.g),
        SystemSpec::Dispersive(p) => {
            format!("dispersive a={} omega={} g={} (g²/|Δ| = {:.3e})", p.a, p.omega, p.g, p.validity_ratio())
        }
        SystemSpec::Multimode(p) => {
            let list = |f: fn(&jc_probe::dynamics::Mode) -> f64| {
                p.modes.iter().map(|m| f(m).to_string()).collect::<Vec<_>>().join(",")
            };
            format!("{} modes a={} omega={} g={}", p.modes.len(), p.a, list(|m| m.omega), list(|m| m.g))
        }
    };
    format!("{system}, cavity {} (dim {:?})", scenario.cavity, dims)
}

pub fn simulate(s: &Settings) -> Result<ExitCode> {
    let scenario = s.scenario()?;
    let stencil = s.stencil_or(Stencil::Forward2);
    let delta = s.delta_or_default()?;
    let steps = s.simulate_steps(stencil)?;
    let times = grid_for(stencil, delta, steps);
    let rec = add_noise(&scenario.simulate(&times)?, &s.noise()?)?;
    let out = s.out.as_deref();
    let format = s.format_for(out);
    match out {
        Some(p) => write_record(&rec, p, format)?,
        None => emit(
            None,
            &match format {
                RecordFormat::Csv => to_csv_string(&rec),
                RecordFormat::Json => to_json_string(&rec),
            },
        )?,
    }
    eprintln!(
        "simulated {} points, δ = {delta}, t ∈ [{}, {}]: {}{}",
        rec.len(),
        rec.times[0],
        rec.times[rec.len() - 1],
        describe(&scenario),
        out.map_or(String::new(), |p| format!(" -> {}", p.display()))
    );
    Ok(ExitCode::SUCCESS)
}

/// Known couplings for the dispersive inversion: explicit settings first,
/// then the record's own metadata.
fn known_coupling(s: &Settings, rec: &TomographyRecord) -> Result<KnownCoupling> {
    let from_meta = rec.meta.system.as_ref().filter(|_| !s.has_physics());
    let (a, omega, g) = match from_meta {
        Some(SystemSpec::Dispersive(p)) => (p.a, p.omega, p.g),
        Some(SystemSpec::JaynesCummings(p)) => (p.a, p.omega, p.g),
        Some(SystemSpec::Multimode(_)) => {
            return Err(Error::Config("dispersive: the inversion needs single-mode parameters".into()))
        }
        None if s.has_physics() => {
            let one = |name: &str, v: Option<&crate::settings::FloatList>| match v.map(|l| l.0.as_slice()) {
                Some([x]) => Ok(*x),
                Some(_) => Err(Error::Config(format!("{name}: dispersive analysis takes a single value"))),
                None => Err(Error::Config(format!("{name}: required for dispersive analysis"))),
            };
            let a = s.a.ok_or_else(|| Error::Config("a: required for dispersive analysis".into()))?;
            (a, one("omega", s.omega.as_ref())?, one("g", s.g.as_ref())?)
        }
        None => {
            return Err(Error::Config(
                "dispersive: pass --a, --omega and --g, or use a record with system metadata".into(),
            ))
        }
    };
    let detuning = a - omega;
    if detuning == 0.0 {
        return Err(Error::DetuningZero);
    }
    Ok(KnownCoupling { a, g, detuning })
}

fn options(s: &Settings, known: Option<KnownCoupling>) -> EstimateOptions {
    EstimateOptions { dispersive: if s.dispersive() { known } else { None }, ..Default::default() }
}

/// Default stencil: forward2, or forward4 for the dispersive inversion, whose
/// photon variance is too sensitive to second-order truncation error.
fn default_stencil(s: &Settings) -> Stencil {
    s.stencil_or(if s.dispersive() { Stencil::Forward4 } else { Stencil::Forward2 })
}

pub fn estimate(s: &Settings) -> Result<ExitCode> {
    let path = s.input.as_deref().ok_or_else(|| Error::Config("input: a record file is required".into()))?;
    let rec = read_record(path)?;
    let delta = match s.delta()? {
        Some(d) => d,
        None if rec.meta.grid_spacing > 0.0 => rec.meta.grid_spacing,
        None => return Err(Error::Config("delta: the record has no uniform spacing; pass --delta".into())),
    };
    let known = if s.dispersive() { Some(known_coupling(s, &rec)?) } else { None };
    let report = estimate_record(&rec, default_stencil(s), delta, &options(s, known))?;
    emit(s.out.as_deref(), &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    eprint!("{}", report::estimate_table(&report, path));
    Ok(if report.issues.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_ESTIMATION) })
}

pub fn sweep(s: &Settings) -> Result<ExitCode> {
    let scenario = s.scenario()?;
    let stencil = default_stencil(s);
    let mut spec = SweepSpec::new(s.deltas()?, stencil);
    spec.steps = s.steps_or(spec.steps)?;
    spec.subsample = s.subsample();
    spec.noise = s.noise()?;
    if s.dispersive() {
        let SystemSpec::Dispersive(p) = &scenario.system else {
            unreachable!("dispersive settings build a dispersive system")
        };
        spec.options.dispersive = Some(KnownCoupling { a: p.a, g: p.g, detuning: p.detuning() });
    }
    let rows = run_sweep(&scenario, &spec)?;
    emit(s.out.as_deref(), &sweep_to_csv(&rows))?;
    eprintln!("sweep: {} ({stencil})", describe(&scenario));
    eprint!("{}", report::sweep_table(&rows));
    if let Some(slope) = fitted_slope(&rows) {
        eprintln!("log-log slope of max parameter error: {slope:.3}");
    }
    Ok(ExitCode::SUCCESS)
}

fn fitted_slope(rows: &[SweepRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.report.is_some())
        .map(|r| (r.delta, r.errors.max_parameter()))
        .filter(|&(_, e)| e > 0.0)
        .collect();
    (pts.len() >= 2).then(|| log_log_slope(&pts))
}

#[derive(Debug, Serialize)]
pub struct OracleComparison {
    pub delta: f64,
    pub stencil: Stencil,
    pub d1_fd: Tensor3,
    pub d2_fd: Tensor3,
    pub max_deviation: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct OracleCheck {
    pub d1_exact: Tensor3,
    pub d2_exact: Tensor3,
    pub moments: Option<CavityMoments>,
    /// Bound `10 δ^p s^(p+2)` with `s = max(1, √max|d2|)`.
    pub scale: f64,
    pub comparisons: Vec<OracleComparison>,
}

pub fn oracle_check(s: &Settings) -> Result<ExitCode> {
    let scenario = s.scenario()?;
    let stencil = s.stencil_or(Stencil::Forward2);
    let deltas = match s.delta {
        Some(_) => s.deltas()?,
        None => vec![s.delta_or_default()?],
    };
    let exact = scenario.exact_derivatives()?;
    let moments = match scenario.mode_dims().len() {
        1 => Some(cavity_moments(&scenario.cavity_state()?)?),
        _ => None,
    };
    let max_d2 = exact.d2.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = max_d2.sqrt().max(1.0);
    let p = stencil.order() as i32;
    let generator = scenario.generator()?;
    let steps = s.steps_or(stencil.max_offset() as usize + 1)?;
    let mut comparisons = Vec::new();
    for &delta in &deltas {
        let rec = scenario.simulate_with(&generator, &grid_for(stencil, delta, steps))?;
        let fd = finite_difference_derivatives(&rec, stencil, delta)?;
        let max_deviation = fd.max_deviation(&exact);
        let bound = 10.0 * delta.powi(p) * scale.powi(p + 2);
        comparisons.push(OracleComparison {
            delta,
            stencil,
            d1_fd: fd.d1,
            d2_fd: fd.d2,
            max_deviation,
            bound,
            pass: max_deviation <= bound,
        });
    }
    let check = OracleCheck { d1_exact: exact.d1, d2_exact: exact.d2, moments, scale, comparisons };
    emit(s.out.as_deref(), &(serde_json::to_string_pretty(&check).expect("check serializes") + "\n"))?;
    eprintln!("oracle-check: {}", describe(&scenario));
    eprint!("{}", report::oracle_table(&check));
    Ok(if check.comparisons.iter().all(|c| c.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ESTIMATION)
    })
}
