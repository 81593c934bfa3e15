//! Bubble-derived grid functions for configurations on the `t`-axis.

use crate::bubbles::{interaction_term, AxisBubble, BubbleConfig, Constants};
use crate::error::Result;
use crate::grid::{AxiGrid, GridCenter, GridFn, GridSpec};

pub fn axis_bubbles(cfg: &BubbleConfig) -> Result<Vec<AxisBubble>> {
    cfg.gauges().iter().map(AxisBubble::from_gauge).collect()
}

/// `𝔤U` for one axis bubble.
pub fn sample_bubble(k: &Constants, b: &AxisBubble, grid: &AxiGrid) -> GridFn {
    grid.sample(|r, t| b.u(k, r, t)).tagged("U")
}

/// `σ = Σ U_i`.
pub fn sample_sigma(k: &Constants, cfg: &BubbleConfig, grid: &AxiGrid) -> Result<GridFn> {
    let bs = axis_bubbles(cfg)?;
    Ok(grid
        .sample(|r, t| bs.iter().map(|b| b.u(k, r, t)).sum())
        .tagged("sigma"))
}

/// `f = σ^p - Σ U_i^p`.
pub fn sample_f(k: &Constants, cfg: &BubbleConfig, grid: &AxiGrid) -> Result<GridFn> {
    let bs = axis_bubbles(cfg)?;
    let p = k.p();
    let mut vals = Vec::with_capacity(bs.len());
    Ok(grid
        .sample(|r, t| {
            vals.clear();
            vals.extend(bs.iter().map(|b| b.u(k, r, t)));
            interaction_term(p, &vals)
        })
        .tagged("f"))
}

/// `Σ U_i^p`, the exact `-Δσ`.
pub fn sample_sum_of_powers(k: &Constants, cfg: &BubbleConfig, grid: &AxiGrid) -> Result<GridFn> {
    let bs = axis_bubbles(cfg)?;
    let p = k.p();
    Ok(grid.sample(|r, t| bs.iter().map(|b| b.u(k, r, t).powf(p)).sum()))
}

/// Box radius used when nothing else is specified; the `t` padding is its
/// square so the box is a gauge ball.
pub const DEFAULT_BOX_RADIUS: f64 = 100.0;

/// Grid spec covering all bubbles of an axis configuration: `|z| ≤ R` and
/// `t` from the lowest centre minus `R²` to the highest plus `R²`, graded
/// around each centre at its core width `1/λ²`.
pub fn config_grid_spec(cfg: &BubbleConfig, resolution: usize, r_max: f64) -> Result<GridSpec> {
    let bs = axis_bubbles(cfg)?;
    let lo = bs.iter().map(|b| b.t0).fold(f64::INFINITY, f64::min);
    let hi = bs.iter().map(|b| b.t0).fold(f64::NEG_INFINITY, f64::max);
    let r_scale = bs.iter().map(|b| 1.0 / b.lambda).fold(f64::INFINITY, f64::min);
    let pad = r_max * r_max;
    Ok(GridSpec {
        n: cfg.dim().n(),
        r_max,
        t_min: lo - pad,
        t_max: hi + pad,
        nr: resolution,
        nt: resolution,
        r_scale,
        centers: bs
            .iter()
            .map(|b| GridCenter {
                t: b.t0,
                scale: 1.0 / (b.lambda * b.lambda),
            })
            .collect(),
    })
}

pub fn config_grid(cfg: &BubbleConfig, resolution: usize, r_max: f64) -> Result<AxiGrid> {
    AxiGrid::build(&config_grid_spec(cfg, resolution, r_max)?)
}

/// [`DEFAULT_BOX_RADIUS`], or ten times the largest gauge distance between
/// centres when that is larger.
pub fn box_radius(cfg: &BubbleConfig) -> Result<f64> {
    let mut far: f64 = 0.0;
    for a in cfg.gauges() {
        for b in cfg.gauges() {
            far = far.max(crate::group::dist(a.xi(), b.xi())?);
        }
    }
    Ok(DEFAULT_BOX_RADIUS.max(10.0 * far))
}
