//! Human-readable summaries, written to stderr next to the machine output.

use std::fmt::Write;
use std::path::Path;

use jc_probe::estimator::Tensor3;
use jc_probe::sweep::SweepRow;
use jc_probe::EstimateReport;

use crate::commands::OracleCheck;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

pub fn estimate_table(r: &EstimateReport, path: &Path) -> String {
    let mut out = String::new();
    let step = match (r.stencil, r.delta) {
        (Some(s), Some(d)) => format!("{s}, δ = {d}"),
        _ => "exact derivatives".into(),
    };
    let _ = writeln!(out, "estimate from {} ({step})", path.display());
    let rows: [(&str, Option<f64>); 10] = [
        ("a", Some(r.a_hat)),
        ("g", Some(r.g_hat)),
        ("omega", r.omega_hat),
        ("<x>", r.x_mean),
        ("<p>", r.p_mean),
        ("V_xx", r.v_xx),
        ("V_pp", r.v_pp),
        ("V_xp", r.v_xp),
        ("<N>", r.n_mean),
        ("Var N", r.n_var),
    ];
    for (name, v) in rows {
        if v.is_some() {
            let _ = writeln!(out, "  {name:<6} {:>12}", opt(v));
        }
    }
    for res in r.flagged_residuals() {
        let _ = writeln!(out, "  residual {} = {:.3e} exceeds tolerance", res.name, res.value);
    }
    for issue in &r.issues {
        let _ = writeln!(out, "  {}: {} ({})", issue.quantity, issue.message, issue.kind);
    }
    for w in &r.warnings {
        let _ = writeln!(out, "  warning: {w}");
    }
    out
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = format!("  {:>8} {:>10} {:>10} {:>10} {:>10}\n", "delta", "a", "g", "omega", "max err");
    for row in rows {
        match &row.report {
            Some(r) => {
                let _ = writeln!(
                    out,
                    "  {:>8} {:>10.6} {:>10.6} {:>10} {:>10.3e}",
                    row.delta,
                    r.a_hat,
                    r.g_hat,
                    r.omega_hat.map_or_else(|| "-".into(), |w| format!("{w:.6}")),
                    row.errors.max_parameter()
                );
            }
            None => {
                let _ = writeln!(out, "  {:>8} failed: {}", row.delta, row.reason.as_deref().unwrap_or("?"));
            }
        }
    }
    out
}

fn tensor_pair(out: &mut String, label: &str, exact: &Tensor3, fd: &Tensor3) {
    let _ = writeln!(out, "  {label:<4} {:^44} | {:^44}", "oracle", "finite difference");
    for (e, f) in exact.iter().zip(fd) {
        let fmt = |r: &[f64; 3]| r.iter().map(|v| format!("{v:>14.6e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "       {} | {}", fmt(e), fmt(f));
    }
}

pub fn oracle_table(c: &OracleCheck) -> String {
    let mut out = String::new();
    let mut previous: Option<f64> = None;
    for cmp in &c.comparisons {
        let _ = writeln!(out, "δ = {} ({})", cmp.delta, cmp.stencil);
        tensor_pair(&mut out, "d1", &c.d1_exact, &cmp.d1_fd);
        tensor_pair(&mut out, "d2", &c.d2_exact, &cmp.d2_fd);
        let verdict = if cmp.pass { "pass" } else { "FAIL" };
        let _ = write!(out, "  max deviation {:.3e}, bound {:.3e}: {verdict}", cmp.max_deviation, cmp.bound);
        if let Some(prev) = previous.filter(|p| *p > 0.0 && cmp.max_deviation > 0.0) {
            let _ = write!(out, " (ratio to previous {:.2})", prev / cmp.max_deviation);
        }
        out.push('\n');
        previous = Some(cmp.max_deviation);
    }
    out
}
