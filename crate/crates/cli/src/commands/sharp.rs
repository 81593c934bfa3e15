use std::time::Instant;

use hstab_core::bubbles::{AxisBubble, BubbleConfig};
use hstab_core::fitter::{stability_quotient, FitOptions};
use hstab_core::interactions::{ScalingCheck, ScalingPoint};
use hstab_core::solver::{solve_rho, RhoOptions};
use serde::Serialize;
use serde_json::json;

use super::scaling::push_scaling;
use super::{constants, dim, grid_for, grid_info, ordered, solver, sweep, sweep_workers};
use crate::config::RunConfig;
use crate::report::{Budget, Check, Report};
use crate::CliError;

pub const DEFAULT_EPS: [f64; 6] = [5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3];
/// `‖ρ‖_{𝒟¹}` should match `‖P(-Δ)⁻¹f‖_{𝒟¹}` to this relative accuracy for ε ≤ 0.05.
pub const LINEAR_TOLERANCE: f64 = 0.2;

#[derive(Clone, Debug, Serialize)]
pub struct SharpPoint {
    pub eps: f64,
    pub rho_norm: f64,
    pub linear_norm: f64,
    pub contraction_factor: f64,
    pub outer_iterations: usize,
    pub max_orthogonality_residual: f64,
    pub deficit: f64,
    pub distance: f64,
    pub quotient: f64,
    pub fitted_eps: f64,
    pub fitted: Vec<AxisBubble>,
    pub fit_iterations: usize,
}

/// `(exponent, log power)` of the lower bound for `‖ρ‖_{𝒟¹}`.
fn rho_regime(n: usize, q: f64) -> (f64, f64) {
    match n {
        1 => (1.0, 0.0),
        2 => (2.0, 0.5),
        _ => ((q + 2.0) / 4.0, 0.0),
    }
}

pub fn cmd_sharp_example(cfg: &RunConfig) -> Result<Report, CliError> {
    let started = Instant::now();
    let budget = Budget::new(cfg.budget);
    let d = dim(cfg)?;
    let n = d.n();
    let k = constants(d, cfg)?;
    let solver_cfg = solver(cfg);
    let eps = ordered(cfg.eps_or(&DEFAULT_EPS));
    let mut report = Report::new("sharp_example", cfg);

    let results = sweep(&eps, sweep_workers(), &budget, |e| {
        let c = BubbleConfig::two_bubble(d, e)?;
        let (grid, spec) = grid_for(&c, cfg, cfg.resolution)?;
        let sol = solve_rho(&k, &c, &grid, &solver_cfg, &RhoOptions::default())?;
        let u = sol.sigma.lin_comb(1.0, &sol.rho, 1.0);
        let truth = c
            .gauges()
            .iter()
            .map(AxisBubble::from_gauge)
            .collect::<Result<Vec<_>, _>>()?;
        let q = stability_quotient(&k, &grid, &u, &truth, &FitOptions::default(), &solver_cfg)?;
        let point = SharpPoint {
            eps: e,
            rho_norm: sol.rho_norm,
            linear_norm: sol.linear_norm,
            contraction_factor: sol.contraction_factor,
            outer_iterations: sol.differences.len(),
            max_orthogonality_residual: sol.orthogonality_residuals.iter().fold(0.0, |a: f64, r| a.max(r.abs())),
            deficit: q.deficit,
            distance: q.fit.distance,
            quotient: q.quotient,
            fitted_eps: q.fit.eps,
            fitted: q.fit.bubbles.clone(),
            fit_iterations: q.fit.iterations,
        };
        Ok((point, spec))
    });

    let mut points = Vec::new();
    for (&e, r) in eps.iter().zip(results) {
        match r {
            None => report.truncated.push(e),
            Some(Ok((p, spec))) => {
                report.grids.push(grid_info(Some(e), spec));
                points.push(p);
            }
            // The fixed point may not exist at large ε; that point is skipped.
            Some(Err(CliError::Core(err @ hstab_core::Error::ContractionFailure { .. })))
            | Some(Err(CliError::Core(err @ hstab_core::Error::NonConvergence { .. }))) => {
                report.notes.push(format!("eps={e} skipped: {err}"));
            }
            Some(Err(other)) => return Err(other),
        }
    }

    let series = |f: &dyn Fn(&SharpPoint) -> f64| -> Vec<ScalingPoint> {
        points.iter().map(|p| ScalingPoint::new(p.eps, f(p), 0.0)).collect()
    };
    let weight = n as f64;
    push_scaling(
        &mut report,
        "deficit",
        series(&|p| p.deficit),
        ScalingCheck::SlopeAtLeast { target: weight, tolerance: 0.1 },
        "the deficit of σ + ρ is O(ε^{(Q-2)/2})",
    );
    let (exponent, log_power) = rho_regime(n, d.q());
    push_scaling(
        &mut report,
        "rho_norm",
        series(&|p| p.rho_norm),
        ScalingCheck::Band { exponent, log_power, factor: 2.0 },
        "‖ρ‖_{𝒟¹} is bounded below by the regime rate",
    );
    if n == 2 {
        push_scaling(
            &mut report,
            "distance_over_deficit",
            series(&|p| p.distance / p.deficit),
            ScalingCheck::IncreasingAsEpsDecreases,
            "distance/deficit grows like |log deficit|^{1/2}",
        );
    } else {
        push_scaling(
            &mut report,
            "stability_quotient",
            series(&|p| p.quotient),
            ScalingCheck::Band { exponent: 0.0, log_power: 0.0, factor: 4.0 },
            "distance over the regime function of the deficit stays bounded",
        );
    }
    push_scaling(
        &mut report,
        "eps_power_over_deficit",
        series(&|p| p.fitted_eps.powi(n as i32) / p.deficit),
        ScalingCheck::SlopeAtLeast { target: 0.0, tolerance: 0.1 },
        "ε^n is bounded by a multiple of the deficit",
    );
    for p in points.iter().filter(|p| p.eps <= 0.05) {
        report.checks.push(Check::relative(
            "rho_over_linear",
            Some(p.eps),
            p.rho_norm,
            p.linear_norm,
            LINEAR_TOLERANCE,
        ));
    }

    report.data = json!({ "points": points });
    report.finish(started);
    Ok(report)
}
