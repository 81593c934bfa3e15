use std::time::Instant;

use hstab_core::bubbles::{calibrate_c0, AxisBubble, Constants};
use hstab_core::fitter::{deficit, regime_function, stability_quotient, FitOptions};
use hstab_core::gridfile;
use serde_json::json;

use super::solver;
use crate::config::RunConfig;
use crate::report::{Check, Report};
use crate::CliError;

pub fn cmd_fit(cfg: &RunConfig) -> Result<Report, CliError> {
    let started = Instant::now();
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("fit needs --input FILE".into()))?;
    let (grid, u) = gridfile::load(path)?;
    let d = grid.dim();
    let cal = calibrate_c0(d)?;
    let k = Constants::new(d, cal.c0() * cfg.c0_scale)?;
    let solver_cfg = solver(cfg);
    let mut report = Report::new("fit", cfg);
    if d.n() != cfg.n {
        report
            .notes
            .push(format!("grid file has n = {}; the configured n = {} is ignored", d.n(), cfg.n));
    }

    if cfg.deficit_only || cfg.init.is_empty() {
        let gamma = deficit(&k, &grid, &u, &[], &solver_cfg)?;
        report.data = json!({
            "n": d.n(),
            "nr": grid.nr(),
            "nt": grid.nt(),
            "deficit": gamma,
            "regime_value": regime_function(d, gamma),
        });
        report.notes.push(format!("deficit = {gamma:.10e}"));
        report.finish(started);
        return Ok(report);
    }

    let init: Vec<AxisBubble> = cfg.init.iter().map(|&(l, t)| AxisBubble::new(l, t)).collect();
    let q = stability_quotient(&k, &grid, &u, &init, &FitOptions::default(), &solver_cfg)?;
    let worst = q.fit.residuals.iter().fold(0.0, |a: f64, r| a.max(r.abs()));
    report
        .checks
        .push(Check::at_most("orthogonality_residual", None, worst, q.fit.tolerance));
    report.notes.push(format!(
        "distance = {:.10e}, deficit = {:.10e}, quotient = {:.6e}",
        q.fit.distance, q.deficit, q.quotient
    ));
    for (i, b) in q.fit.bubbles.iter().enumerate() {
        report
            .notes
            .push(format!("bubble {i}: lambda = {:.10}, t0 = {:.10}", b.lambda, b.t0));
    }
    report.data = json!({
        "n": d.n(),
        "nr": grid.nr(),
        "nt": grid.nt(),
        "bubbles": q.fit.bubbles,
        "gauges": q.fit.config(d)?.gauges(),
        "distance": q.fit.distance,
        "deficit": q.deficit,
        "quotient": q.quotient,
        "regime_value": q.regime_value,
        "residuals": q.fit.residuals,
        "tolerance": q.fit.tolerance,
        "eps": q.fit.eps,
        "iterations": q.fit.iterations,
        "trace": q.fit.trace,
    });
    report.finish(started);
    Ok(report)
}
