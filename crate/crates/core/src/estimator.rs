//! Derivative estimation at `t = 0` and inversion of the derivative
//! relations for the Hamiltonian parameters and cavity moments.
//!
//! Tensors are indexed `[i][k]` (Pauli, preparation), zero-based, so
//! `d1[0][1]` is `ċ₁^(2)(0)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tomography::TomographyRecord;

pub type Tensor3 = [[f64; 3]; 3];

pub const DEFAULT_TOL_RAD: f64 = 1e-8;
pub const DEFAULT_G_MIN_REL: f64 = 1e-6;
pub const DEFAULT_NOISE_FLOOR: f64 = 1e-6;
/// A quadrature-mean route for omega is usable above this multiple of the
/// derivative noise floor.
pub const OMEGA_ROUTE_FACTOR: f64 = 10.0;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-2;

/// Finite-difference stencils over uniformly spaced samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    /// One-sided, second order; uses `0, δ, 2δ, 3δ`.
    Forward2,
    /// Symmetric, second order; uses `−δ, 0, δ`.
    Central2,
    /// One-sided, fourth order; uses `0, δ, …, 5δ`.
    Forward4,
}

impl Stencil {
    pub fn name(self) -> &'static str {
        match self {
            Stencil::Forward2 => "forward2",
            Stencil::Central2 => "central2",
            Stencil::Forward4 => "forward4",
        }
    }

    /// `(node offset, weight)` for the first derivative, in units of `1/δ`.
    pub fn first_weights(self) -> &'static [(i32, f64)] {
        match self {
            Stencil::Forward2 => &[(0, -1.5), (1, 2.0), (2, -0.5)],
            Stencil::Central2 => &[(-1, -0.5), (1, 0.5)],
            Stencil::Forward4 => &[(0, -25.0 / 12.0), (1, 4.0), (2, -3.0), (3, 4.0 / 3.0), (4, -0.25)],
        }
    }

    /// `(node offset, weight)` for the second derivative, in units of `1/δ²`.
    pub fn second_weights(self) -> &'static [(i32, f64)] {
        match self {
            Stencil::Forward2 => &[(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)],
            Stencil::Central2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
            Stencil::Forward4 => &[
                (0, 15.0 / 4.0),
                (1, -77.0 / 6.0),
                (2, 107.0 / 6.0),
                (3, -13.0),
                (4, 61.0 / 12.0),
                (5, -5.0 / 6.0),
            ],
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Stencil::Forward2 | Stencil::Central2 => 2,
            Stencil::Forward4 => 4,
        }
    }

    /// Largest forward offset needed; the grid needs this many steps past 0.
    pub fn max_offset(self) -> i32 {
        self.first_weights().iter().chain(self.second_weights()).map(|&(o, _)| o).max().unwrap_or(0)
    }

    /// Magnitudes of the leading truncation-error coefficients `(C₁, C₂)`:
    /// the first-derivative error is `C₁ δ^p f^(p+1)`, the second `C₂ δ^p f^(p+2)`.
    pub fn error_constants(self) -> (f64, f64) {
        match self {
            Stencil::Forward2 => (1.0 / 3.0, 11.0 / 12.0),
            Stencil::Central2 => (1.0 / 6.0, 1.0 / 12.0),
            Stencil::Forward4 => (1.0 / 5.0, 137.0 / 180.0),
        }
    }

    /// Expected truncation error of the coupling radicand when the qubit
    /// precesses at frequency `a`; a radicand this far below zero is still
    /// consistent with `g = 0`.
    pub fn radicand_truncation(self, delta: f64, a: f64) -> f64 {
        let (c1, c2) = self.error_constants();
        let p = self.order() as i32;
        // two diagonal second derivatives plus the 2a² term, with a safety factor of 2
        2.0 * (c2 + 2.0 * c1) * (a.abs() * delta).powi(p) * a * a
    }

    pub fn needs_negative_times(self) -> bool {
        matches!(self, Stencil::Central2)
    }

    /// Standard deviation of the first-derivative estimate under i.i.d. noise `sigma`.
    pub fn first_noise_gain(self, sigma: f64, delta: f64) -> f64 {
        sigma * self.first_weights().iter().map(|(_, w)| w * w).sum::<f64>().sqrt() / delta
    }
}

impl fmt::Display for Stencil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stencil {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward2" => Ok(Stencil::Forward2),
            "central2" => Ok(Stencil::Central2),
            "forward4" => Ok(Stencil::Forward4),
            other => Err(Error::Config(format!("unknown stencil {other:?} (forward2, central2, forward4)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum DerivativeSource {
    FiniteDifference { stencil: Stencil, delta: f64 },
    Analytic,
}

/// First and second derivatives of all nine series at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSet {
    pub d1: Tensor3,
    pub d2: Tensor3,
    pub source: DerivativeSource,
}

impl DerivativeSet {
    pub fn analytic(d1: Tensor3, d2: Tensor3) -> Self {
        DerivativeSet { d1, d2, source: DerivativeSource::Analytic }
    }

    pub fn delta(&self) -> Option<f64> {
        match self.source {
            DerivativeSource::FiniteDifference { delta, .. } => Some(delta),
            DerivativeSource::Analytic => None,
        }
    }

    pub fn stencil(&self) -> Option<Stencil> {
        match self.source {
            DerivativeSource::FiniteDifference { stencil, .. } => Some(stencil),
            DerivativeSource::Analytic => None,
        }
    }

    /// Largest entrywise deviation from `other` over both tensors.
    pub fn max_deviation(&self, other: &DerivativeSet) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for k in 0..3 {
                worst = worst
                    .max((self.d1[i][k] - other.d1[i][k]).abs())
                    .max((self.d2[i][k] - other.d2[i][k]).abs());
            }
        }
        worst
    }
}

pub fn finite_difference_derivatives(
    rec: &TomographyRecord,
    stencil: Stencil,
    delta: f64,
) -> Result<DerivativeSet> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidStep(delta));
    }
    let node = |offset: i32| -> Result<usize> {
        let t = offset as f64 * delta;
        rec.find_time(t, delta).ok_or_else(|| Error::GridIncompatible {
            stencil: stencil.name(),
            message: if offset < 0 && !rec.has_negative_times() {
                format!("no sample at t = {t}; central stencils need a symmetric grid")
            } else {
                format!("no sample at t = {t}")
            },
        })
    };
    let apply = |weights: &[(i32, f64)], power: i32| -> Result<Tensor3> {
        let nodes: Vec<(usize, f64)> =
            weights.iter().map(|&(o, w)| node(o).map(|j| (j, w))).collect::<Result<_>>()?;
        let scale = delta.powi(power);
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|k| {
                let s = &rec.series[i][k];
                nodes.iter().map(|&(j, w)| w * s[j]).sum::<f64>() / scale
            })
        }))
    };
    Ok(DerivativeSet {
        d1: apply(stencil.first_weights(), 1)?,
        d2: apply(stencil.second_weights(), 2)?,
        source: DerivativeSource::FiniteDifference { stencil, delta },
    })
}

/// Estimator thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Radicands in `[−tol_rad, 0)` are clamped to zero; below is an error.
    pub tol_rad: f64,
    /// `g_min = g_min_rel · max(1, |a|)`.
    pub g_min_rel: f64,
    /// Noise floor of a first-derivative estimate.
    pub noise_floor: f64,
    /// Residuals above `residual_tol · max(1, a², g²)` are flagged.
    pub residual_tol: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            tol_rad: DEFAULT_TOL_RAD,
            g_min_rel: DEFAULT_G_MIN_REL,
            noise_floor: DEFAULT_NOISE_FLOOR,
            residual_tol: DEFAULT_RESIDUAL_TOL,
        }
    }
}

impl EstimatorConfig {
    pub fn coupling_threshold(&self, a: f64) -> f64 {
        self.g_min_rel * a.abs().max(1.0)
    }
}

/// `a = −ċ₁^(2)(0)`
pub fn estimate_a(d: &DerivativeSet) -> f64 {
    -d.d1[0][1]
}

pub fn estimate_g(d: &DerivativeSet, a: f64) -> Result<f64> {
    estimate_g_with_tolerance(d, a, DEFAULT_TOL_RAD)
}

/// `g = √(½[c̈₁^(1) + c̈₂^(2) − c̈₃^(3) + 2a²])`, non-negative root.
pub fn estimate_g_with_tolerance(d: &DerivativeSet, a: f64, tol_rad: f64) -> Result<f64> {
    let radicand = 0.5 * (d.d2[0][0] + d.d2[1][1] - d.d2[2][2] + 2.0 * a * a);
    if radicand.is_nan() {
        return Err(Error::NegativeRadicand(radicand));
    }
    if radicand < -tol_rad {
        return Err(Error::NegativeRadicand(radicand));
    }
    Ok(radicand.max(0.0).sqrt())
}

fn check_coupling(g: f64, a: f64, cfg: &EstimatorConfig) -> Result<()> {
    let g_min = cfg.coupling_threshold(a);
    if g > g_min {
        Ok(())
    } else {
        Err(Error::CouplingTooSmall { g, g_min })
    }
}

/// `(⟨x̂⟩, ⟨p̂⟩) = (−ċ₂^(3), −ċ₁^(3)) / (√2 g)`, for the `g ≥ 0` convention.
pub fn estimate_quadrature_means(d: &DerivativeSet, g: f64) -> Result<(f64, f64)> {
    quadrature_means_with(d, g, &EstimatorConfig::default())
}

fn quadrature_means_with(d: &DerivativeSet, g: f64, cfg: &EstimatorConfig) -> Result<(f64, f64)> {
    check_coupling(g, estimate_a(d), cfg)?;
    let s = std::f64::consts::SQRT_2 * g;
    Ok((-d.d1[1][2] / s, -d.d1[0][2] / s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaRoute {
    /// From `c̈₁^(3)/ċ₂^(3)`; needs `⟨x̂⟩ ≠ 0`.
    X,
    /// From `c̈₂^(3)/ċ₁^(3)`; needs `⟨p̂⟩ ≠ 0`.
    P,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaEstimate {
    pub value: f64,
    pub route: OmegaRoute,
    /// `ω_x − ω_p` when both routes individually clear the threshold.
    pub spread: Option<f64>,
}

pub fn estimate_omega(d: &DerivativeSet, a: f64) -> Result<OmegaEstimate> {
    estimate_omega_with_floor(d, a, DEFAULT_NOISE_FLOOR)
}

/// Least-squares `a + ω` from the two linear relations
/// `c̈₁^(3) = −(a+ω) ċ₂^(3)` and `c̈₂^(3) = (a+ω) ċ₁^(3)`.
///
/// Each route is weighted by its squared denominator, so a route whose
/// quadrature mean is zero (and whose ratio is pure truncation error)
/// contributes nothing. Identifiable when the combined denominator clears
/// `10 × noise_floor`.
pub fn estimate_omega_with_floor(d: &DerivativeSet, a: f64, noise_floor: f64) -> Result<OmegaEstimate> {
    let threshold = OMEGA_ROUTE_FACTOR * noise_floor;
    let x_den = d.d1[1][2];
    let p_den = d.d1[0][2];
    let norm_sq = x_den * x_den + p_den * p_den;
    if norm_sq.is_nan() || norm_sq.sqrt() <= threshold {
        return Err(Error::OmegaUnidentifiable { threshold });
    }
    let value = (-d.d2[0][2] * x_den + d.d2[1][2] * p_den) / norm_sq - a;
    let (x_ok, p_ok) = (x_den.abs() > threshold, p_den.abs() > threshold);
    let route = match (x_ok, p_ok) {
        (true, true) => OmegaRoute::Both,
        (false, true) => OmegaRoute::P,
        // x dominates, or neither alone clears the threshold
        _ if x_den.abs() >= p_den.abs() => OmegaRoute::X,
        _ => OmegaRoute::P,
    };
    let spread = (x_ok && p_ok).then(|| (-d.d2[0][2] / x_den) - (d.d2[1][2] / p_den));
    Ok(OmegaEstimate { value, route, spread })
}

/// Symmetric 2×2 matrix of centered quadrature second moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceMatrix {
    pub xx: f64,
    pub pp: f64,
    pub xp: f64,
}

impl VarianceMatrix {
    pub fn determinant(&self) -> f64 {
        self.xx * self.pp - self.xp * self.xp
    }

    pub fn is_physical(&self) -> bool {
        self.xx > 0.0 && self.pp > 0.0
    }
}

pub fn estimate_variance_matrix(d: &DerivativeSet, a: f64, g: f64) -> Result<VarianceMatrix> {
    variance_matrix_with(d, a, g, &EstimatorConfig::default())
}

fn variance_matrix_with(d: &DerivativeSet, a: f64, g: f64, cfg: &EstimatorConfig) -> Result<VarianceMatrix> {
    check_coupling(g, a, cfg)?;
    let den = 2.0 * g * g;
    let (d13, d23) = (d.d1[0][2], d.d1[1][2]);
    Ok(VarianceMatrix {
        xx: (-a * a - d.d2[1][1] - d23 * d23) / den,
        pp: (-a * a - d.d2[0][0] - d13 * d13) / den,
        xp: (-d.d2[0][1] - d13 * d23) / den,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonStatistics {
    pub mean: f64,
    pub variance: f64,
}

/// Photon-number mean and variance from dispersive-regime data, given the
/// already known `a`, `g` and detuning `Δ = a − ω`.
pub fn estimate_photon_statistics(
    d: &DerivativeSet,
    a: f64,
    g: f64,
    delta_detuning: f64,
) -> Result<PhotonStatistics> {
    photon_statistics_with(d, a, g, delta_detuning, &EstimatorConfig::default())
}

fn photon_statistics_with(
    d: &DerivativeSet,
    a: f64,
    g: f64,
    delta: f64,
    cfg: &EstimatorConfig,
) -> Result<PhotonStatistics> {
    if delta == 0.0 {
        return Err(Error::DetuningZero);
    }
    check_coupling(g, a, cfg)?;
    let chi = g * g / delta;
    let mean = (d.d1[1][0] - a) / (2.0 * chi) - 0.5;
    let a_sq_mean = -d.d2[0][0];
    let offset = (4.0 * chi * chi + 4.0 * a * chi) * mean + a * a + chi * chi + 2.0 * a * chi;
    let variance = (a_sq_mean - offset) / (4.0 * chi * chi) - mean * mean;
    Ok(PhotonStatistics { mean, variance })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub quantity: String,
    pub kind: String,
    pub message: String,
}

impl Issue {
    fn new(quantity: &str, err: &Error) -> Self {
        Issue { quantity: quantity.into(), kind: err.kind().into(), message: err.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMode {
    JaynesCummings,
    Dispersive,
}

/// Everything recovered from one derivative set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub mode: EstimationMode,
    pub stencil: Option<Stencil>,
    pub delta: Option<f64>,
    pub a_hat: f64,
    pub g_hat: f64,
    pub omega_hat: Option<f64>,
    pub omega_route: Option<OmegaRoute>,
    pub x_mean: Option<f64>,
    pub p_mean: Option<f64>,
    pub v_xx: Option<f64>,
    pub v_pp: Option<f64>,
    pub v_xp: Option<f64>,
    pub n_mean: Option<f64>,
    pub n_var: Option<f64>,
    pub residuals: Vec<Residual>,
    /// Quantities that could not be estimated, with the typed reason.
    pub issues: Vec<Issue>,
    pub warnings: Vec<String>,
}

impl EstimateReport {
    pub fn quad_means(&self) -> Option<(f64, f64)> {
        Some((self.x_mean?, self.p_mean?))
    }

    pub fn variance_matrix(&self) -> Option<VarianceMatrix> {
        Some(VarianceMatrix { xx: self.v_xx?, pp: self.v_pp?, xp: self.v_xp? })
    }

    pub fn photon_stats(&self) -> Option<PhotonStatistics> {
        Some(PhotonStatistics { mean: self.n_mean?, variance: self.n_var? })
    }

    pub fn flagged_residuals(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(|r| r.flagged)
    }
}

/// Couplings assumed known when analysing dispersive-regime data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownCoupling {
    pub a: f64,
    pub g: f64,
    pub detuning: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub config: EstimatorConfig,
    /// Analyse as dispersive data with these known couplings.
    pub dispersive: Option<KnownCoupling>,
}

/// Runs the full inversion on one derivative set.
///
/// A failed coupling estimate is an error; unidentifiable quadrature means,
/// variance matrix or omega are recorded as issues and the remaining fields
/// are still filled in.
pub fn estimate_from_derivatives(d: &DerivativeSet, opts: &EstimateOptions) -> Result<EstimateReport> {
    let cfg = &opts.config;
    let mut report = EstimateReport {
        mode: EstimationMode::JaynesCummings,
        stencil: d.stencil(),
        delta: d.delta(),
        a_hat: 0.0,
        g_hat: 0.0,
        omega_hat: None,
        omega_route: None,
        x_mean: None,
        p_mean: None,
        v_xx: None,
        v_pp: None,
        v_xp: None,
        n_mean: None,
        n_var: None,
        residuals: Vec::new(),
        issues: Vec::new(),
        warnings: Vec::new(),
    };

    if let Some(known) = opts.dispersive {
        report.mode = EstimationMode::Dispersive;
        report.a_hat = known.a;
        report.g_hat = known.g;
        report.omega_hat = Some(known.a - known.detuning);
        let stats = photon_statistics_with(d, known.a, known.g, known.detuning, cfg)?;
        report.n_mean = Some(stats.mean);
        report.n_var = Some(stats.variance);
        report.residuals = consistency_check_with(d, &report, cfg);
        return Ok(report);
    }

    let a = estimate_a(d);
    let g = estimate_g_with_tolerance(d, a, cfg.tol_rad)?;
    report.a_hat = a;
    report.g_hat = g;

    match quadrature_means_with(d, g, cfg) {
        Ok((x, p)) => {
            report.x_mean = Some(x);
            report.p_mean = Some(p);
        }
        Err(e) => report.issues.push(Issue::new("quadrature_means", &e)),
    }
    match variance_matrix_with(d, a, g, cfg) {
        Ok(v) => {
            if !v.is_physical() {
                report
                    .warnings
                    .push(format!("non-physical variance matrix (v_xx = {:.3e}, v_pp = {:.3e})", v.xx, v.pp));
            }
            report.v_xx = Some(v.xx);
            report.v_pp = Some(v.pp);
            report.v_xp = Some(v.xp);
        }
        Err(e) => report.issues.push(Issue::new("variance_matrix", &e)),
    }
    match estimate_omega_with_floor(d, a, cfg.noise_floor) {
        Ok(w) => {
            report.omega_hat = Some(w.value);
            report.omega_route = Some(w.route);
        }
        Err(e) => report.issues.push(Issue::new("omega", &e)),
    }
    report.residuals = consistency_check_with(d, &report, cfg);
    Ok(report)
}

/// Finite differences on `rec` followed by [`estimate_from_derivatives`].
/// The radicand tolerance is widened by the stencil's truncation error and
/// the derivative noise floor is raised to match the record's noise level.
pub fn estimate_record(
    rec: &TomographyRecord,
    stencil: Stencil,
    delta: f64,
    opts: &EstimateOptions,
) -> Result<EstimateReport> {
    let d = finite_difference_derivatives(rec, stencil, delta)?;
    let mut opts = *opts;
    opts.config.tol_rad = opts.config.tol_rad.max(stencil.radicand_truncation(delta, estimate_a(&d)));
    let sigma = rec.meta.noise.sigma();
    if sigma > 0.0 {
        opts.config.noise_floor = opts.config.noise_floor.max(stencil.first_noise_gain(sigma, delta));
    }
    estimate_from_derivatives(&d, &opts)
}

/// Signed violations of the redundant relations not used for estimation.
pub fn consistency_check(d: &DerivativeSet, report: &EstimateReport) -> Vec<Residual> {
    consistency_check_with(d, report, &EstimatorConfig::default())
}

fn consistency_check_with(
    d: &DerivativeSet,
    report: &EstimateReport,
    cfg: &EstimatorConfig,
) -> Vec<Residual> {
    let (a, g) = (report.a_hat, report.g_hat);
    let tol = cfg.residual_tol * (a * a).max(g * g).max(1.0);
    let mut out = Vec::new();
    let mut push = |name: &str, value: f64| {
        out.push(Residual { name: name.into(), value, flagged: value.is_nan() || value.abs() > tol });
    };
    let d1 = &d.d1;
    let d2 = &d.d2;
    for (i, row) in d1.iter().enumerate() {
        push(&format!("d1_diag_{}", i + 1), row[i]);
    }
    for (i, k) in [(0, 1), (0, 2), (1, 2)] {
        push(&format!("d1_antisym_{}{}", i + 1, k + 1), d1[i][k] + d1[k][i]);
    }
    push("d2_sym_12", d2[1][0] - d2[0][1]);

    match report.mode {
        EstimationMode::Dispersive => {
            push("d2_11_minus_22", d2[0][0] - d2[1][1]);
        }
        EstimationMode::JaynesCummings => {
            // ω-dependent terms multiply first derivatives that sit below the
            // route threshold whenever ω is unidentifiable, so they are dropped.
            let (sum, diff) = match report.omega_hat {
                Some(w) => (a + w, a - w),
                None => (0.0, 0.0),
            };
            push("d2_13_relation", d2[0][2] + sum * d1[1][2]);
            push("d2_23_relation", d2[1][2] - sum * d1[0][2]);
            push("d2_31_relation", d2[2][0] - (-diff * d1[1][2] - 2.0 * g * g));
            push("d2_32_relation", d2[2][1] - (diff * d1[0][2] - 2.0 * g * g));
        }
    }
    out
}
