//! Correction `ρ ⊥ ℱ` making `σ + ρ` solve the Yamabe equation modulo `ℱ`.
//!
//! With `K = p(-Δ)⁻¹σ^{p-1}` and `P` the projection off the modes, `ρ` is the
//! fixed point of `ρ ↦ (I - PK)⁻¹ P(-Δ)⁻¹(f + N(ρ))`, iterated from `ρ = 0`.
//! Each application of `(I - PK)⁻¹` is an inner GMRES solve in the `𝒟¹`
//! inner product; the operator is `𝒟¹`-self-adjoint on `ℱ⊥` but indefinite.

use serde::{Deserialize, Serialize};

use super::gmres::gmres;
use super::modes::ModeBasis;
use super::{Poisson, SolverConfig};
use crate::bubbles::{nonlinearity, BubbleConfig, Constants};
use crate::error::{Error, Result};
use crate::fields;
use crate::grid::{AxiGrid, GridFn};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoOptions {
    /// Stop once successive iterates differ by at most this in `𝒟¹`.
    pub tolerance: f64,
    pub max_outer: usize,
    pub gmres_tolerance: f64,
    pub gmres_restart: usize,
    pub gmres_max_iterations: usize,
}

impl Default for RhoOptions {
    fn default() -> Self {
        RhoOptions {
            tolerance: 1e-8,
            max_outer: 40,
            gmres_tolerance: 1e-10,
            gmres_restart: 80,
            gmres_max_iterations: 800,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RhoSolution {
    pub rho: GridFn,
    pub sigma: GridFn,
    pub f: GridFn,
    pub basis: ModeBasis,
    /// `‖ρ_{k+1} - ρ_k‖_{𝒟¹}` per outer iteration.
    pub differences: Vec<f64>,
    /// Ratios of successive differences.
    pub contraction_factors: Vec<f64>,
    /// Largest observed ratio (0 when the iteration stopped after one step).
    pub contraction_factor: f64,
    pub gmres_iterations: Vec<usize>,
    pub rho_norm: f64,
    /// `‖P(-Δ)⁻¹f‖_{𝒟¹}`, the linear prediction for `‖ρ‖_{𝒟¹}`.
    pub linear_norm: f64,
    /// `(ρ, Z_i^a)_{𝒟¹}` for the raw modes.
    pub orthogonality_residuals: Vec<f64>,
}

/// `x ↦ p A⁻¹W(σ^{p-1}x)` followed by the projection off the modes.
pub(crate) struct ProjectedK<'a> {
    pub poisson: &'a Poisson<'a>,
    pub basis: Option<&'a ModeBasis>,
    pub potential: Vec<f64>,
}

impl ProjectedK<'_> {
    pub(crate) fn new<'a>(
        poisson: &'a Poisson<'a>,
        basis: Option<&'a ModeBasis>,
        p: f64,
        sigma: &GridFn,
    ) -> ProjectedK<'a> {
        let potential = sigma.values.iter().map(|s| p * s.powf(p - 1.0)).collect();
        ProjectedK {
            poisson,
            basis,
            potential,
        }
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let grid = self.poisson.grid();
        let mut src: Vec<f64> = x.iter().zip(&self.potential).map(|(a, b)| a * b).collect();
        grid.zero_boundary(&mut src);
        let (mut y, _) = self.poisson.solve_stiffness(&self.poisson.mass(&src))?;
        if let Some(b) = self.basis {
            b.project_in_place(grid, &mut y);
        }
        Ok(y)
    }
}

/// Solve for `ρ` for an axial configuration; single bubbles give `ρ = 0`.
pub fn solve_rho(
    k: &Constants,
    cfg: &BubbleConfig,
    grid: &AxiGrid,
    solver: &SolverConfig,
    opts: &RhoOptions,
) -> Result<RhoSolution> {
    if !cfg.is_axial() {
        return Err(Error::InvalidArgument(
            "the correction solve needs all bubble centres on the t-axis".into(),
        ));
    }
    let poisson = Poisson::new(grid, *solver)?;
    let basis = ModeBasis::new(k, cfg, grid)?;
    let sigma = fields::sample_sigma(k, cfg, grid)?;
    let f = fields::sample_f(k, cfg, grid)?;
    let p = k.p();
    let kop = ProjectedK::new(&poisson, Some(&basis), p, &sigma);
    let energy = |a: &[f64], b: &[f64]| grid.energy(a, b);

    let projected_solve = |src: &[f64]| -> Result<Vec<f64>> {
        let mut s = src.to_vec();
        grid.zero_boundary(&mut s);
        let (mut y, _) = poisson.solve_stiffness(&poisson.mass(&s))?;
        basis.project_in_place(grid, &mut y);
        Ok(y)
    };
    let linear = projected_solve(&f.values)?;
    let linear_norm = energy(&linear, &linear).max(0.0).sqrt();

    let inner_solve = |rhs: &[f64]| {
        gmres(
            |x| {
                let kx = kop.apply(x)?;
                Ok(x.iter().zip(&kx).map(|(a, b)| a - b).collect())
            },
            energy,
            rhs,
            opts.gmres_tolerance,
            opts.gmres_restart,
            opts.gmres_max_iterations,
        )
    };

    let mut rho = vec![0.0; grid.len()];
    let mut differences = Vec::new();
    let mut contraction_factors = Vec::new();
    let mut gmres_iterations = Vec::new();
    let mut converged = linear_norm == 0.0;
    for _ in 0..opts.max_outer {
        if converged {
            break;
        }
        let src: Vec<f64> = f
            .values
            .iter()
            .zip(&sigma.values)
            .zip(&rho)
            .map(|((fv, s), r)| fv + nonlinearity(p, *s, *r))
            .collect();
        let rhs = projected_solve(&src)?;
        let (mut next, stats) = inner_solve(&rhs)?;
        basis.project_in_place(grid, &mut next);
        gmres_iterations.push(stats.iterations);
        let diff: Vec<f64> = next.iter().zip(&rho).map(|(a, b)| a - b).collect();
        let d = energy(&diff, &diff).max(0.0).sqrt();
        if let Some(&prev) = differences.last() {
            let prev: f64 = prev;
            if prev > 0.0 {
                contraction_factors.push(d / prev);
            }
        }
        differences.push(d);
        rho = next;
        let norm = energy(&rho, &rho).max(0.0).sqrt();
        if let Some(&q) = contraction_factors.last() {
            if q >= 1.0 && d > opts.tolerance {
                return Err(Error::ContractionFailure { factor: q });
            }
        }
        if d <= opts.tolerance || d <= 1e-12 * norm {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            solver: "correction fixed point",
            iterations: differences.len(),
            residual: differences.last().copied().unwrap_or(f64::NAN),
        });
    }
    let rho = GridFn::new(rho).tagged("rho");
    let rho_norm = grid.energy(&rho.values, &rho.values).max(0.0).sqrt();
    let orthogonality_residuals = basis.residuals(grid, &rho);
    let contraction_factor = contraction_factors.iter().copied().fold(0.0, f64::max);
    Ok(RhoSolution {
        rho,
        sigma,
        f,
        basis,
        differences,
        contraction_factors,
        contraction_factor,
        gmres_iterations,
        rho_norm,
        linear_norm,
        orthogonality_residuals,
    })
}
