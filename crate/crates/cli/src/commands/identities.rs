use std::time::Instant;

use hstab_core::bubbles::{calibrate_with_report, sample_points};
use hstab_core::identities::{bubble_equation_residual, group_law_check, mode_equation_residual};
use hstab_core::interactions::{bubble_mass, bubble_power_integral, critical_exponent, euler_ratio};
use hstab_core::Gauge;
use serde_json::json;

use super::{constants, dim, quad_options};
use crate::config::RunConfig;
use crate::report::{Check, Report};
use crate::CliError;

/// Largest admissible `|ΔU + U^p|/U^p` and `|ΔZ + pU^{p-1}Z|/U^p`.
pub const PDE_TOLERANCE: f64 = 1e-5;
/// Relative tolerance of `∫TU·U^{p-1} / ∫U^p = -Q/p`.
pub const EULER_TOLERANCE: f64 = 1e-3;

pub fn cmd_identities(cfg: &RunConfig) -> Result<Report, CliError> {
    let started = Instant::now();
    let d = dim(cfg)?;
    let mut report = Report::new("identities", cfg);
    let cal = calibrate_with_report(d)?;
    let k = constants(d, cfg)?;
    let quad = quad_options(cfg);

    report
        .checks
        .push(Check::at_most("calibration_spread", None, cal.spread, 1e-6));
    let pde = bubble_equation_residual(&k, cfg.points, 2.0, cfg.seed);
    report
        .checks
        .push(Check::at_most("bubble_equation_residual", None, pde.max_relative, PDE_TOLERANCE));

    let centre = sample_points(d, 1, 0.5, cfg.seed.wrapping_add(7)).remove(0);
    let g = Gauge::new(1.3, centre)?;
    let modes = mode_equation_residual(&k, &g, cfg.points, 1.5, cfg.seed.wrapping_add(8))?;
    report
        .checks
        .push(Check::at_most("mode_equation_residual", None, modes.max_relative, PDE_TOLERANCE));

    let euler = euler_ratio(&k, &quad)?;
    report.checks.push(
        Check::relative("euler_ratio", None, euler.ratio, euler.predicted, EULER_TOLERANCE).with_error(euler.error),
    );

    let mass = bubble_power_integral(&k, critical_exponent(d), &quad)?;
    report.checks.push(
        Check::relative("bubble_mass", None, mass.value, bubble_mass(&k), 1e-6).with_error(mass.error),
    );

    let group = group_law_check(d, cfg.points, cfg.seed.wrapping_add(9))?;
    report.checks.push(Check::at_most("group_law", None, group.max(), 1e-12));

    report.data = json!({
        "c0": k.c0(),
        "calibrated_c0": cal.constants.c0(),
        "calibration": cal,
        "bubble_equation": pde,
        "mode_equation": modes,
        "mode_gauge": g,
        "euler": euler,
        "group_law": group,
    });
    report.finish(started);
    Ok(report)
}
