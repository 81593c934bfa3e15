use std::time::Instant;

use hstab_core::bubbles::BubbleConfig;
use hstab_core::solver::{coercivity_estimate, CoercivityOptions, CoercivityReport};
use serde::Serialize;
use serde_json::json;

use super::{constants, dim, grid_for, grid_info, ordered, solver, sweep, sweep_workers};
use crate::config::RunConfig;
use crate::report::{Budget, Check, Report};
use crate::CliError;

pub const DEFAULT_EPS: [f64; 3] = [1e-1, 5e-2, 2e-2];
/// Projected `μ_min` must stay above this fraction of the single-bubble value.
pub const BASELINE_FRACTION: f64 = 0.5;
/// Unprojected `μ_min` must be below this fraction of the projected one.
pub const UNPROJECTED_FRACTION: f64 = 0.1;
/// Relative change allowed under refinement by 3/2.
pub const REFINEMENT_TOLERANCE: f64 = 0.1;

#[derive(Clone, Debug, Serialize)]
pub struct CoercivityPoint {
    pub eps: f64,
    pub projected: CoercivityReport,
    pub unprojected: CoercivityReport,
}

pub fn cmd_coercivity(cfg: &RunConfig) -> Result<Report, CliError> {
    let started = Instant::now();
    let budget = Budget::new(cfg.budget);
    let d = dim(cfg)?;
    let k = constants(d, cfg)?;
    let solver_cfg = solver(cfg);
    let eps = ordered(cfg.eps_or(&DEFAULT_EPS));
    let mut report = Report::new("coercivity", cfg);
    let projected = CoercivityOptions {
        seed: cfg.seed,
        ..CoercivityOptions::default()
    };
    let unprojected = CoercivityOptions {
        projected: false,
        ..projected
    };

    let single = BubbleConfig::on_axis(d, &[(1.0, 0.0)])?;
    let (grid, spec) = grid_for(&single, cfg, cfg.resolution)?;
    let baseline = coercivity_estimate(&k, &single, &grid, &solver_cfg, &projected)?;
    let baseline_free = coercivity_estimate(&k, &single, &grid, &solver_cfg, &unprojected)?;
    report.checks.push(Check::at_most(
        "mu_single_unprojected",
        None,
        baseline_free.mu_min,
        UNPROJECTED_FRACTION * baseline.mu_min,
    ));
    report.grids.push(grid_info(None, spec));
    drop(grid);

    let results = sweep(&eps, sweep_workers(), &budget, |e| {
        let c = BubbleConfig::two_bubble(d, e)?;
        let (grid, spec) = grid_for(&c, cfg, cfg.resolution)?;
        let p = coercivity_estimate(&k, &c, &grid, &solver_cfg, &projected)?;
        let u = coercivity_estimate(&k, &c, &grid, &solver_cfg, &unprojected)?;
        Ok((
            CoercivityPoint {
                eps: e,
                projected: p,
                unprojected: u,
            },
            spec,
        ))
    });
    let mut points = Vec::new();
    for (&e, r) in eps.iter().zip(results) {
        match r {
            None => report.truncated.push(e),
            Some(r) => {
                let (p, spec) = r?;
                report.grids.push(grid_info(Some(e), spec));
                points.push(p);
            }
        }
    }

    let floor = BASELINE_FRACTION * baseline.mu_min;
    for p in &points {
        report
            .checks
            .push(Check::at_least("mu_projected", Some(p.eps), p.projected.mu_min, floor));
        report.checks.push(Check::at_most(
            "mu_unprojected",
            Some(p.eps),
            p.unprojected.mu_min,
            UNPROJECTED_FRACTION * p.projected.mu_min,
        ));
    }
    let mut refined = None;
    if let Some(p) = points.first() {
        if !budget.exhausted() {
            let c = BubbleConfig::two_bubble(d, p.eps)?;
            let (grid, spec) = grid_for(&c, cfg, cfg.resolution * 3 / 2)?;
            let r = coercivity_estimate(&k, &c, &grid, &solver_cfg, &projected)?;
            report.checks.push(Check::relative(
                "mu_refined",
                Some(p.eps),
                r.mu_min,
                p.projected.mu_min,
                REFINEMENT_TOLERANCE,
            ));
            report.grids.push(grid_info(Some(p.eps), spec));
            refined = Some(r);
        }
    }
    let min_projected = points.iter().map(|p| p.projected.mu_min).fold(f64::INFINITY, f64::min);
    report.data = json!({
        "baseline": baseline,
        "baseline_unprojected": baseline_free,
        "min_projected": if points.is_empty() { None } else { Some(min_projected) },
        "points": points,
        "refined": refined,
    });
    report.finish(started);
    Ok(report)
}
