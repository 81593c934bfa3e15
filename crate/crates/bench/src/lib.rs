//! Shared fixtures for the benchmarks.

use hstab_core::bubbles::{calibrate_c0, BubbleConfig, Constants};
use hstab_core::fields::{box_radius, config_grid};
use hstab_core::grid::AxiGrid;
use hstab_core::Dim;

pub struct Setup {
    pub k: Constants,
    pub cfg: BubbleConfig,
    pub grid: AxiGrid,
}

/// Two unit bubbles at interaction parameter `eps` on a grid of the given
/// resolution.
pub fn two_bubbles(n: usize, eps: f64, resolution: usize) -> Setup {
    let k = calibrate_c0(Dim::new(n).expect("n >= 1")).expect("calibration");
    let cfg = BubbleConfig::two_bubble(k.dim(), eps).expect("eps > 0");
    let grid = config_grid(&cfg, resolution, box_radius(&cfg).expect("box")).expect("grid");
    Setup { k, cfg, grid }
}
