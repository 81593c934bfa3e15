//! Axisymmetric bubble modes and the `𝒟¹`-orthogonal projection off them.
//!
//! For bubbles centred on the `t`-axis, only the `t`-translation mode
//! `Z^{2n+1}` and the dilation mode `Z^{2n+2}` have a nonzero axisymmetric
//! part; the horizontal translation modes are odd under `z ↦ -z` and pair to
//! zero with every axisymmetric function.

use crate::bubbles::{AxisBubble, BubbleConfig, Constants};
use crate::error::{Error, Result};
use crate::grid::{AxiGrid, GridFn};

/// `𝒟¹`-orthonormal basis of the sampled axisymmetric modes of a
/// configuration.
#[derive(Clone, Debug)]
pub struct ModeBasis {
    /// Orthonormal elements (Gram–Schmidt applied twice).
    pub elements: Vec<GridFn>,
    /// Raw sampled modes `(Z_i^{2n+1}, Z_i^{2n+2})` per bubble, boundary zeroed.
    pub modes: Vec<GridFn>,
}

impl ModeBasis {
    pub fn new(k: &Constants, cfg: &BubbleConfig, grid: &AxiGrid) -> Result<Self> {
        let mut modes = Vec::with_capacity(2 * cfg.len());
        for g in cfg.gauges() {
            let b = AxisBubble::from_gauge(g)?;
            for which in 0..2 {
                let mut f = grid.sample(|r, t| {
                    if which == 0 {
                        b.z_t(k, r, t)
                    } else {
                        b.z_dil(k, r, t)
                    }
                });
                grid.zero_boundary(&mut f.values);
                modes.push(f.tagged(if which == 0 { "Z_t" } else { "Z_dil" }));
            }
        }
        ModeBasis::from_modes(grid, modes)
    }

    /// Orthonormalise arbitrary grid functions in `d1_inner`.
    pub fn from_modes(grid: &AxiGrid, modes: Vec<GridFn>) -> Result<Self> {
        let mut elements: Vec<GridFn> = Vec::with_capacity(modes.len());
        for m in &modes {
            let norm0 = grid.energy(&m.values, &m.values).sqrt();
            let mut v = m.values.clone();
            for _ in 0..2 {
                for e in &elements {
                    let c = grid.energy(&v, &e.values);
                    for (vi, ei) in v.iter_mut().zip(&e.values) {
                        *vi -= c * ei;
                    }
                }
            }
            let norm = grid.energy(&v, &v).sqrt();
            if !(norm > 1e-10 * norm0) {
                return Err(Error::InvalidArgument(
                    "bubble modes are linearly dependent on this grid".into(),
                ));
            }
            elements.push(GridFn::new(v.iter().map(|x| x / norm).collect()));
        }
        Ok(ModeBasis { elements, modes })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Gram matrix of the elements in `d1_inner`.
    pub fn gram(&self, grid: &AxiGrid) -> Vec<Vec<f64>> {
        self.elements
            .iter()
            .map(|a| {
                self.elements
                    .iter()
                    .map(|b| grid.energy(&a.values, &b.values))
                    .collect()
            })
            .collect()
    }

    /// `(u, Z)_{𝒟¹}` for every raw mode.
    pub fn residuals(&self, grid: &AxiGrid, u: &GridFn) -> Vec<f64> {
        self.modes
            .iter()
            .map(|m| grid.energy(&u.values, &m.values))
            .collect()
    }

    pub(crate) fn project_in_place(&self, grid: &AxiGrid, v: &mut [f64]) {
        for e in &self.elements {
            let c = grid.energy(v, &e.values);
            for (vi, ei) in v.iter_mut().zip(&e.values) {
                *vi -= c * ei;
            }
        }
    }
}

/// `u - Σ_k (u, e_k)_{𝒟¹} e_k`, the projection onto the orthogonal
/// complement of the modes.
pub fn project_off(grid: &AxiGrid, u: &GridFn, basis: &ModeBasis) -> Result<GridFn> {
    if u.len() != grid.len() {
        return Err(Error::Grid("grid function does not match grid".into()));
    }
    let mut v = u.values.clone();
    basis.project_in_place(grid, &mut v);
    Ok(GridFn::new(v))
}
