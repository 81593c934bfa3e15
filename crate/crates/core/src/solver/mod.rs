//! Sparse solves of `-Lω = f` with homogeneous Dirichlet data on the outer
//! box faces, `𝒟⁻¹` norms, projections off the bubble modes, the projected
//! fixed point for the correction `ρ`, and coercivity estimates.

mod cg;
mod fastdiag;
mod gmres;
pub mod coercivity;
pub mod modes;
pub mod rho;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AxiGrid, GridFn};

pub use cg::CgStats;
pub use gmres::GmresStats;
pub use coercivity::{coercivity_estimate, CoercivityOptions, CoercivityReport};

pub use modes::{project_off, ModeBasis};
pub use rho::{solve_rho, RhoOptions, RhoSolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    None,
    Diagonal,
    /// Exact inverse of the separable stiffness matrix (see `fastdiag`).
    FastDiagonalization,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative residual `‖b - Aω‖/‖b‖` required of every solve.
    pub cg_tolerance: f64,
    pub max_iterations: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cg_tolerance: 1e-10,
            max_iterations: 20_000,
            preconditioner: Preconditioner::FastDiagonalization,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cg_tolerance > 0.0 && self.cg_tolerance <= 1e-4) {
            return Err(Error::InvalidArgument(format!(
                "cg tolerance must lie in (0, 1e-4], got {}",
                self.cg_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Dirichlet Poisson problem on a fixed grid with its preconditioner set up.
pub struct Poisson<'g> {
    grid: &'g AxiGrid,
    cfg: SolverConfig,
    fast: Option<fastdiag::FastDiag>,
    inv_diag: Vec<f64>,
    weights: Vec<f64>,
}

impl<'g> Poisson<'g> {
    pub fn new(grid: &'g AxiGrid, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let fast = match cfg.preconditioner {
            Preconditioner::FastDiagonalization => Some(fastdiag::FastDiag::new(grid)),
            _ => None,
        };
        let inv_diag = match cfg.preconditioner {
            Preconditioner::Diagonal => stiffness_diagonal(grid)
                .iter()
                .map(|&v| if v > 0.0 { 1.0 / v } else { 0.0 })
                .collect(),
            _ => Vec::new(),
        };
        Ok(Poisson {
            grid,
            cfg,
            fast,
            inv_diag,
            weights: grid.weights(),
        })
    }

    pub fn grid(&self) -> &AxiGrid {
        self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Dirichlet stiffness matrix applied to a vector (boundary entries are
    /// treated as zero and returned as zero).
    pub fn apply_stiffness(&self, x: &[f64]) -> Vec<f64> {
        let mut xm = x.to_vec();
        self.grid.zero_boundary(&mut xm);
        let mut y = self.grid.flux(&xm);
        self.grid.zero_boundary(&mut y);
        y
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        match self.cfg.preconditioner {
            Preconditioner::None => r.to_vec(),
            Preconditioner::Diagonal => r.iter().zip(&self.inv_diag).map(|(a, b)| a * b).collect(),
            Preconditioner::FastDiagonalization => {
                self.fast.as_ref().expect("factorised at construction").solve(r)
            }
        }
    }

    /// Solve `A x = b` on the interior nodes.
    pub fn solve_stiffness(&self, b: &[f64]) -> Result<(Vec<f64>, CgStats)> {
        if b.len() != self.grid.len() {
            return Err(Error::Grid(format!(
                "right side has {} values, grid has {} nodes",
                b.len(),
                self.grid.len()
            )));
        }
        let mut bm = b.to_vec();
        self.grid.zero_boundary(&mut bm);
        cg::pcg(
            |x| self.apply_stiffness(x),
            |r| self.precondition(r),
            &bm,
            self.cfg.cg_tolerance,
            self.cfg.max_iterations,
        )
    }

    /// `ω = (-L)⁻¹ f`, i.e. `A ω = W f`.
    pub fn solve(&self, f: &GridFn) -> Result<GridFn> {
        Ok(self.solve_with_stats(f)?.0)
    }

    pub fn solve_with_stats(&self, f: &GridFn) -> Result<(GridFn, CgStats)> {
        let b = self.mass(&f.values);
        let (x, stats) = self.solve_stiffness(&b)?;
        Ok((GridFn::new(x), stats))
    }

    /// `W f`.
    pub fn mass(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `‖f‖_{𝒟⁻¹} = (∫ f ω)^{1/2}` with `ω = (-L)⁻¹ f`.
    pub fn dminus1_norm(&self, f: &GridFn) -> Result<f64> {
        let omega = self.solve(f)?;
        let mut fm = f.values.clone();
        self.grid.zero_boundary(&mut fm);
        Ok(self.grid.weighted_dot(&fm, &omega.values).max(0.0).sqrt())
    }
}

fn stiffness_diagonal(grid: &AxiGrid) -> Vec<f64> {
    let nr = grid.nr();
    let nt = grid.nt();
    let cr = grid.radial_conductance();
    let br = grid.t_flux_factor();
    let dt = grid.t_lengths();
    let inv_ht = grid.inv_t_steps();
    let mut d = vec![0.0; grid.len()];
    for i in 0..nr {
        for j in 0..nt {
            let mut s = 0.0;
            if i > 0 {
                s += cr[i - 1] * dt[j];
            }
            if i + 1 < nr {
                s += cr[i] * dt[j];
            }
            if j > 0 {
                s += br[i] * inv_ht[j - 1];
            }
            if j + 1 < nt {
                s += br[i] * inv_ht[j];
            }
            d[i * nt + j] = s;
        }
    }
    d
}

/// `ω = (-L)⁻¹ f` with zero Dirichlet data.
pub fn solve_poisson(grid: &AxiGrid, f: &GridFn, cfg: &SolverConfig) -> Result<GridFn> {
    Poisson::new(grid, *cfg)?.solve(f)
}

/// `‖f‖_{𝒟⁻¹}` through one Poisson solve.
pub fn dminus1_norm(grid: &AxiGrid, f: &GridFn, cfg: &SolverConfig) -> Result<f64> {
    Poisson::new(grid, *cfg)?.dminus1_norm(f)
}
