use std::time::Instant;

use hstab_core::bubbles::BubbleConfig;
use hstab_core::fields::sample_f;
use hstab_core::green::closed_form_constant;
use hstab_core::interactions::{
    kernel_double_norm, pair_integral, pairing_lower_bound, zmode_ratio, KernelOptions, ScalingCheck, ScalingPoint,
    ScalingReport,
};
use hstab_core::solver::dminus1_norm;
use serde_json::json;

use super::{constants, dim, grid_for, grid_info, ordered, quad_options, solver, sweep, sweep_workers};
use crate::config::RunConfig;
use crate::report::{Budget, Check, Report};
use crate::CliError;

pub const DEFAULT_EPS_N1: [f64; 7] = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3];
pub const DEFAULT_EPS_N2: [f64; 6] = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3];
pub const DEFAULT_EPS_HIGH: [f64; 7] = [1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4];

/// Tolerance on the `∫U^p V` slope.
pub const PAIR_SLOPE_TOLERANCE: f64 = 0.05;
/// Relative tolerance of the Z-mode ratio against its limit at the smallest ε.
pub const ZMODE_TOLERANCE: f64 = 0.1;
/// Tolerance on the n ≥ 3 slopes of the pairing bound and the dual norm.
pub const HIGH_DIM_SLOPE_TOLERANCE: f64 = 0.2;
/// Largest max/min of `‖f‖_{𝒟⁻¹}/(ε²|log ε|^{1/2})` for n = 2.
pub const LOG_BAND_FACTOR: f64 = 2.0;
/// Relative agreement of the kernel double integral with the Poisson value.
pub const KERNEL_TOLERANCE: f64 = 0.1;

pub fn default_eps(n: usize) -> Vec<f64> {
    match n {
        1 => DEFAULT_EPS_N1.to_vec(),
        2 => DEFAULT_EPS_N2.to_vec(),
        _ => DEFAULT_EPS_HIGH.to_vec(),
    }
}

/// What the dual norm of the interaction term is checked against.
pub fn dual_norm_check(n: usize, q: f64) -> (ScalingCheck, &'static str) {
    match n {
        1 => (
            ScalingCheck::SlopeAtLeast { target: 1.0, tolerance: 0.05 },
            "‖f‖_{𝒟⁻¹} = O(ε) when n = 1",
        ),
        2 => (
            ScalingCheck::Band { exponent: 2.0, log_power: 0.5, factor: LOG_BAND_FACTOR },
            "‖f‖_{𝒟⁻¹} ≍ ε²|log ε|^{1/2} when n = 2",
        ),
        _ => (
            ScalingCheck::SlopeEquals { target: (q + 2.0) / 4.0, tolerance: HIGH_DIM_SLOPE_TOLERANCE },
            "‖f‖_{𝒟⁻¹} ≍ ε^{(Q+2)/4} when n ≥ 3",
        ),
    }
}

/// Add a scaling report, or a failed check when the sweep is unusable.
pub(crate) fn push_scaling(report: &mut Report, quantity: &str, points: Vec<ScalingPoint>, check: ScalingCheck, why: &str) {
    let count = points.len();
    match ScalingReport::new(quantity, points, check, why) {
        Ok(r) => report.scaling.push(r),
        Err(e) => {
            report.notes.push(format!("{quantity}: {e}"));
            report.checks.push(Check::at_least(&format!("{quantity}_points"), None, count as f64, 4.0));
        }
    }
}

fn named<T>(quantity: &str, r: Result<T, hstab_core::Error>) -> Result<T, CliError> {
    r.map_err(|e| {
        eprintln!("hstab: {quantity} failed: {e}");
        CliError::Core(e)
    })
}

/// Sequential sweep of a quantity that parallelises internally.
fn quadrature_sweep<F>(
    report: &mut Report,
    quantity: &str,
    eps: &[f64],
    budget: &Budget,
    mut f: F,
) -> Result<Vec<(f64, f64, f64)>, CliError>
where
    F: FnMut(f64) -> Result<(f64, f64), hstab_core::Error>,
{
    let mut out = Vec::new();
    for &e in eps {
        if budget.exhausted() {
            report.notes.push(format!("{quantity}: budget exhausted before eps={e}"));
            if !report.truncated.contains(&e) {
                report.truncated.push(e);
            }
            continue;
        }
        let (v, err) = named(quantity, f(e))?;
        out.push((e, v, err));
    }
    Ok(out)
}

pub fn cmd_scaling(cfg: &RunConfig) -> Result<Report, CliError> {
    let started = Instant::now();
    let budget = Budget::new(cfg.budget);
    let d = dim(cfg)?;
    let n = d.n();
    let k = constants(d, cfg)?;
    let quad = quad_options(cfg);
    let solver_cfg = solver(cfg);
    let eps = ordered(cfg.eps_or(&default_eps(n)));
    let mut report = Report::new("scaling", cfg);
    let mut data = serde_json::Map::new();

    // ∫ U^p V with V a unit bubble at t = -1/ε: slope n·1.
    let p = k.p();
    let pair = quadrature_sweep(&mut report, "pair_integral", &eps, &budget, |e| {
        pair_integral(&k, p, 1.0, 1.0, 1.0 / e, &quad).map(|r| (r.value, r.error))
    })?;
    push_scaling(
        &mut report,
        "pair_integral",
        pair.iter().map(|&(e, v, err)| ScalingPoint::new(e, v, err)).collect(),
        ScalingCheck::SlopeEquals { target: n as f64, tolerance: PAIR_SLOPE_TOLERANCE },
        "∫U^p V ~ ε^n for two unit bubbles at distance ε^{-1/2}",
    );

    let zmode = quadrature_sweep(&mut report, "zmode_ratio", &eps, &budget, |e| {
        zmode_ratio(&k, 1.0, 1.0 / e, &quad).map(|z| (z.ratio, z.error))
    })?;
    if let Some(&(e, ratio, err)) = zmode.last() {
        let limit = hstab_core::interactions::zmode_limit(d);
        report
            .checks
            .push(Check::relative("zmode_ratio", Some(e), ratio, limit, ZMODE_TOLERANCE).with_error(err));
    }
    data.insert("zmode_ratio".into(), json!(zmode));

    if n >= 3 {
        let pairing = quadrature_sweep(&mut report, "pairing_lower_bound", &eps, &budget, |e| {
            let c = BubbleConfig::two_bubble(d, e)?;
            pairing_lower_bound(&k, &c, &quad).map(|b| (b.bound, 0.0))
        })?;
        push_scaling(
            &mut report,
            "pairing_lower_bound",
            pairing.iter().map(|&(e, v, err)| ScalingPoint::new(e, v, err)).collect(),
            ScalingCheck::SlopeEquals { target: (d.q() + 2.0) / 4.0, tolerance: HIGH_DIM_SLOPE_TOLERANCE },
            "⟨f, η⟩/‖η‖_{𝒟¹} with a cut-off η near one bubble bounds ‖f‖_{𝒟⁻¹} from below",
        );
    }

    // Poisson pipeline: one grid and one solve per ε, in parallel.
    let results = sweep(&eps, sweep_workers(), &budget, |e| {
        let c = BubbleConfig::two_bubble(d, e)?;
        let (grid, spec) = grid_for(&c, cfg, cfg.resolution)?;
        let f = sample_f(&k, &c, &grid)?;
        let v = named("dual_norm_f", dminus1_norm(&grid, &f, &solver_cfg))?;
        Ok((v, spec))
    });
    let mut dual = Vec::new();
    for (&e, r) in eps.iter().zip(results) {
        match r {
            None => {
                if !report.truncated.contains(&e) {
                    report.truncated.push(e);
                }
            }
            Some(r) => {
                let (v, spec) = r?;
                report.grids.push(grid_info(Some(e), spec));
                dual.push(ScalingPoint::new(e, v, 0.0));
            }
        }
    }
    let (check, why) = dual_norm_check(n, d.q());
    push_scaling(&mut report, "dual_norm_f", dual.clone(), check, why);

    if n == 2 && cfg.kernel_check {
        if let Some(pt) = dual
            .iter()
            .min_by(|a, b| (a.eps.ln() - 0.05f64.ln()).abs().total_cmp(&(b.eps.ln() - 0.05f64.ln()).abs()))
        {
            let c = BubbleConfig::two_bubble(d, pt.eps)?;
            let opts = KernelOptions {
                samples: cfg.samples,
                seed: cfg.seed,
                ..KernelOptions::default()
            };
            let kn = named("kernel_cross_check", kernel_double_norm(&k, &c, closed_form_constant(d), &opts))?;
            report.checks.push(
                Check::relative("kernel_cross_check", Some(pt.eps), kn.value, pt.value * pt.value, KERNEL_TOLERANCE)
                    .with_error(kn.std_error),
            );
            data.insert("kernel".into(), json!(kn));
        }
    }

    report.data = serde_json::Value::Object(data);
    report.finish(started);
    Ok(report)
}
