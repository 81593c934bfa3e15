//! The five subcommands. Each returns a [`Report`]; writing it is left to the
//! caller.

mod coercivity;
mod fit;
mod identities;
mod scaling;
mod sharp;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use hstab_core::bubbles::{calibrate_with_report, BubbleConfig, Constants};
use hstab_core::fields::{box_radius, config_grid_spec};
use hstab_core::grid::{AxiGrid, GridSpec};
use hstab_core::quadrature::QuadratureOptions;
use hstab_core::sampling::thread_count;
use hstab_core::solver::SolverConfig;
use hstab_core::Dim;

use crate::config::RunConfig;
use crate::report::{Budget, GridInfo};
use crate::CliError;

pub use coercivity::cmd_coercivity;
pub use fit::cmd_fit;
pub use identities::cmd_identities;
pub use scaling::cmd_scaling;
pub use sharp::cmd_sharp_example;

pub(crate) fn dim(cfg: &RunConfig) -> Result<Dim, CliError> {
    Ok(Dim::new(cfg.n)?)
}

/// Calibrated constants, with `c₀` scaled by `c0_scale`.
pub(crate) fn constants(d: Dim, cfg: &RunConfig) -> Result<Constants, CliError> {
    let cal = calibrate_with_report(d)?;
    Ok(Constants::new(d, cal.constants.c0() * cfg.c0_scale)?)
}

pub(crate) fn quad_options(cfg: &RunConfig) -> QuadratureOptions {
    QuadratureOptions {
        tolerance: cfg.quad_tolerance(),
        max_halvings: if cfg.n >= 3 { 6 } else { 5 },
        ..QuadratureOptions::default()
    }
}

pub(crate) fn solver(cfg: &RunConfig) -> SolverConfig {
    SolverConfig {
        cg_tolerance: cfg.cg_tolerance,
        ..SolverConfig::default()
    }
}

pub(crate) fn grid_for(
    bubbles: &BubbleConfig,
    cfg: &RunConfig,
    resolution: usize,
) -> Result<(AxiGrid, GridSpec), CliError> {
    let r = match cfg.box_radius {
        Some(r) => r,
        None => box_radius(bubbles)?,
    };
    let spec = config_grid_spec(bubbles, resolution, r)?;
    Ok((AxiGrid::build(&spec)?, spec))
}

pub(crate) fn grid_info(eps: Option<f64>, spec: GridSpec) -> GridInfo {
    GridInfo { eps, spec }
}

/// Evaluate `f` at every sweep point on up to `workers` threads, in index
/// order of start. Points not started before the budget runs out are `None`.
pub(crate) fn sweep<T, F>(eps: &[f64], workers: usize, budget: &Budget, f: F) -> Vec<Option<Result<T, CliError>>>
where
    T: Send,
    F: Fn(f64) -> Result<T, CliError> + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T, CliError>>>> = Mutex::new((0..eps.len()).map(|_| None).collect());
    let workers = workers.clamp(1, eps.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= eps.len() || budget.exhausted() {
                    break;
                }
                let out = f(eps[i]);
                slots.lock().expect("no panics while holding the lock")[i] = Some(out);
            });
        }
    });
    slots.into_inner().expect("workers joined")
}

/// Workers for sweeps whose points are single-threaded internally.
pub(crate) fn sweep_workers() -> usize {
    thread_count()
}

/// Sort sweep values by decreasing ε, dropping duplicates.
pub(crate) fn ordered(mut eps: Vec<f64>) -> Vec<f64> {
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    eps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_keeps_order_and_respects_budget() {
        let eps = [0.1, 0.05, 0.02, 0.01];
        let out = sweep(&eps, 3, &Budget::new(60.0), |e| Ok(2.0 * e));
        let got: Vec<f64> = out.into_iter().map(|o| o.unwrap().unwrap()).collect();
        assert_eq!(got, vec![0.2, 0.1, 0.04, 0.02]);
        let spent = Budget::new(1e-9);
        std::thread::sleep(std::time::Duration::from_millis(2));
        assert!(sweep(&eps, 2, &spent, |e| Ok(e)).iter().all(Option::is_none));
    }

    #[test]
    fn ordering() {
        assert_eq!(ordered(vec![0.01, 0.1, 0.05, 0.1]), vec![0.1, 0.05, 0.01]);
    }
}
