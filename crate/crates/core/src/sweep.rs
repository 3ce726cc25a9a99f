//! Step-size sweeps: recovered quantities and their errors as a function of δ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_record, EstimateOptions, EstimateReport, Stencil};
use crate::scenario::{Scenario, Truth};
use crate::tomography::{add_noise, symmetric_grid, uniform_grid, NoiseSpec, TimeSeriesGenerator};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub deltas: Vec<f64>,
    /// Grid points per record (past t = 0 for one-sided stencils).
    pub steps: usize,
    pub stencil: Stencil,
    /// Reuse one fine grid for every δ instead of regenerating per δ.
    pub subsample: bool,
    pub noise: NoiseSpec,
    pub options: EstimateOptions,
}

impl SweepSpec {
    pub fn new(deltas: Vec<f64>, stencil: Stencil) -> Self {
        SweepSpec {
            deltas,
            steps: stencil.max_offset() as usize + 1,
            stencil,
            subsample: false,
            noise: NoiseSpec::default(),
            options: EstimateOptions::default(),
        }
    }
}

/// Grid for spacing `delta` with `steps` points past the origin.
pub fn grid_for(stencil: Stencil, delta: f64, steps: usize) -> Vec<f64> {
    if stencil.needs_negative_times() {
        symmetric_grid(delta, steps)
    } else {
        uniform_grid(delta, steps)
    }
}

/// Error of an estimate: relative, or absolute when the truth is zero.
pub fn error_against(estimate: f64, truth: f64) -> f64 {
    if truth.abs() > 1e-12 {
        ((estimate - truth) / truth).abs()
    } else {
        (estimate - truth).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RowErrors {
    pub a: Option<f64>,
    pub g: Option<f64>,
    pub omega: Option<f64>,
    pub x_mean: Option<f64>,
    pub p_mean: Option<f64>,
    pub v_xx: Option<f64>,
    pub v_pp: Option<f64>,
    pub v_xp: Option<f64>,
    pub n_mean: Option<f64>,
    pub n_var: Option<f64>,
}

impl RowErrors {
    pub fn new(report: &EstimateReport, truth: &Truth) -> Self {
        let pair = |est: Option<f64>, tr: Option<f64>| Some(error_against(est?, tr?));
        let v = truth.variance;
        RowErrors {
            a: Some(error_against(report.a_hat, truth.a)),
            g: Some(error_against(report.g_hat, truth.g)),
            omega: pair(report.omega_hat, truth.omega),
            x_mean: pair(report.x_mean, truth.x_mean),
            p_mean: pair(report.p_mean, truth.p_mean),
            v_xx: pair(report.v_xx, v.map(|v| v.xx)),
            v_pp: pair(report.v_pp, v.map(|v| v.pp)),
            v_xp: pair(report.v_xp, v.map(|v| v.xp)),
            n_mean: pair(report.n_mean, truth.n_mean),
            n_var: pair(report.n_var, truth.n_var),
        }
    }

    /// Largest error among the Hamiltonian parameters a, g, ω.
    pub fn max_parameter(&self) -> f64 {
        [self.a, self.g, self.omega].into_iter().flatten().fold(0.0, f64::max)
    }

    /// Largest error over every estimated quantity.
    pub fn max_all(&self) -> f64 {
        [
            self.a,
            self.g,
            self.omega,
            self.x_mean,
            self.p_mean,
            self.v_xx,
            self.v_pp,
            self.v_xp,
            self.n_mean,
            self.n_var,
        ]
        .into_iter()
        .flatten()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub report: Option<EstimateReport>,
    pub errors: RowErrors,
    /// Why the row failed, when it did.
    pub reason: Option<String>,
}

/// Runs the estimator once per δ. Failures become rows with a reason; the
/// sweep itself only fails on setup errors.
pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let generator = scenario.generator()?;
    run_sweep_with(scenario, &generator, spec)
}

pub fn run_sweep_with(
    scenario: &Scenario,
    generator: &TimeSeriesGenerator,
    spec: &SweepSpec,
) -> Result<Vec<SweepRow>> {
    if spec.deltas.is_empty() {
        return Err(Error::Config("sweep needs at least one step size".into()));
    }
    if let Some(&bad) = spec.deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidStep(bad));
    }
    let truth = scenario.truth()?;
    let shared = if spec.subsample { Some(subsampled_record(scenario, generator, spec)?) } else { None };

    let row = |delta: f64| -> SweepRow {
        let result = match &shared {
            Some(rec) => estimate_record(rec, spec.stencil, delta, &spec.options),
            None => scenario
                .simulate_with(generator, &grid_for(spec.stencil, delta, spec.steps))
                .and_then(|rec| add_noise(&rec, &spec.noise))
                .and_then(|rec| estimate_record(&rec, spec.stencil, delta, &spec.options)),
        };
        match result {
            Ok(report) => SweepRow {
                delta,
                errors: RowErrors::new(&report, &truth),
                report: Some(report),
                reason: None,
            },
            Err(e) => SweepRow {
                delta,
                report: None,
                errors: RowErrors::default(),
                reason: Some(format!("{}: {e}", e.kind())),
            },
        }
    };

    #[cfg(feature = "parallel")]
    let rows = {
        use rayon::prelude::*;
        spec.deltas.par_iter().map(|&d| row(d)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows = spec.deltas.iter().map(|&d| row(d)).collect();
    Ok(rows)
}

fn subsampled_record(
    scenario: &Scenario,
    generator: &TimeSeriesGenerator,
    spec: &SweepSpec,
) -> Result<crate::tomography::TomographyRecord> {
    let base = spec.deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut widest = 1usize;
    for &d in &spec.deltas {
        let ratio = d / base;
        let m = ratio.round();
        if (ratio - m).abs() > 1e-9 * ratio {
            return Err(Error::Config(format!(
                "subsampling needs every step to be a multiple of {base}; {d} is not"
            )));
        }
        widest = widest.max(m as usize);
    }
    let steps = (spec.steps - 1) * widest + 1;
    let rec = scenario.simulate_with(generator, &grid_for(spec.stencil, base, steps))?;
    add_noise(&rec, &spec.noise)
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "delta",
    "a_hat",
    "g_hat",
    "omega_hat",
    "x_mean",
    "p_mean",
    "v_xx",
    "v_pp",
    "v_xp",
    "n_mean",
    "n_var",
    "err_a",
    "err_g",
    "err_omega",
    "err_x_mean",
    "err_p_mean",
    "err_v_xx",
    "err_v_pp",
    "err_v_xp",
    "err_n_mean",
    "err_n_var",
    "max_param_err",
    "reason",
];

/// Plot-ready CSV; missing values are written as `NaN`.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let opt = |x: Option<f64>| x.map_or_else(|| "NaN".to_string(), |v| v.to_string());
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        let r = row.report.as_ref();
        let e = &row.errors;
        let fields = [
            row.delta.to_string(),
            opt(r.map(|r| r.a_hat)),
            opt(r.map(|r| r.g_hat)),
            opt(r.and_then(|r| r.omega_hat)),
            opt(r.and_then(|r| r.x_mean)),
            opt(r.and_then(|r| r.p_mean)),
            opt(r.and_then(|r| r.v_xx)),
            opt(r.and_then(|r| r.v_pp)),
            opt(r.and_then(|r| r.v_xp)),
            opt(r.and_then(|r| r.n_mean)),
            opt(r.and_then(|r| r.n_var)),
            opt(e.a),
            opt(e.g),
            opt(e.omega),
            opt(e.x_mean),
            opt(e.p_mean),
            opt(e.v_xx),
            opt(e.v_pp),
            opt(e.v_xp),
            opt(e.n_mean),
            opt(e.n_var),
            opt(r.map(|_| e.max_parameter())),
            row.reason.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Least-squares slope of `ln(err)` against `ln(δ)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(d, e)| (d.ln(), e.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
