//! Best approximation of a grid function by a sum of axis bubbles in the
//! `𝒟¹` norm, the deficit `‖Lu + |u|^{p-1}u‖_{𝒟⁻¹}`, and the stability
//! quotient built from the two.
//!
//! Bubbles are parameterised by `(ln λ, t₀)`. The derivatives of
//! `λ^n U(λ²r², λ²(t - t₀))` are the dilation mode (in `ln λ`) and `λ²` times
//! the `t`-translation mode (in `t₀`), so the Gauss–Newton normal matrix is
//! the `𝒟¹` Gram matrix of the modes and a stationary point is exactly a
//! remainder orthogonal to all of them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bubbles::{AxisBubble, BubbleConfig, Constants};
use crate::error::{Error, Result};
use crate::grid::{AxiGrid, GridFn};
use crate::group::Dim;
use crate::solver::{Poisson, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when every `|(ρ, Z)_{𝒟¹}|` is below this times `‖u‖_{𝒟¹}`.
    pub relative_tolerance: f64,
    /// Largest interaction parameter accepted for an iterate.
    pub collision_guard: f64,
    /// Relative ridge added to the diagonal of the normal matrix.
    pub regularization: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 60,
            relative_tolerance: 1e-6,
            collision_guard: 0.5,
            regularization: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub bubbles: Vec<AxisBubble>,
    /// `‖u - Σ 𝔤_k U‖_{𝒟¹}`.
    pub distance: f64,
    /// `(ρ, Z_k^{2n+1})_{𝒟¹}` and `(ρ, Z_k^{2n+2})_{𝒟¹}` for each bubble.
    pub residuals: Vec<f64>,
    pub tolerance: f64,
    pub eps: f64,
    pub iterations: usize,
    /// Distance after each accepted step, starting with the initial guess.
    pub trace: Vec<f64>,
    pub converged: bool,
}

impl FitResult {
    pub fn config(&self, dim: Dim) -> Result<BubbleConfig> {
        let gauges = self
            .bubbles
            .iter()
            .map(|b| b.gauge(dim))
            .collect::<Result<Vec<_>>>()?;
        BubbleConfig::new(dim, gauges)
    }
}

fn sample_sum(k: &Constants, grid: &AxiGrid, bubbles: &[AxisBubble]) -> Vec<f64> {
    grid.sample(|r, t| bubbles.iter().map(|b| b.u(k, r, t)).sum()).values
}

fn interaction_eps(dim: Dim, bubbles: &[AxisBubble]) -> Result<f64> {
    if bubbles.len() < 2 {
        return Ok(0.0);
    }
    let gauges = bubbles.iter().map(|b| b.gauge(dim)).collect::<Result<Vec<_>>>()?;
    Ok(BubbleConfig::new(dim, gauges)?.eps())
}

fn remainder(grid: &AxiGrid, u: &GridFn, sigma: &[f64]) -> Vec<f64> {
    let mut rho: Vec<f64> = u.values.iter().zip(sigma).map(|(a, b)| a - b).collect();
    grid.zero_boundary(&mut rho);
    rho
}

/// Mode samples `(Z_t, Z_dil)` per bubble, zero on the boundary.
fn modes(k: &Constants, grid: &AxiGrid, bubbles: &[AxisBubble]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * bubbles.len());
    for b in bubbles {
        let mut zt = grid.sample(|r, t| b.z_t(k, r, t)).values;
        let mut zd = grid.sample(|r, t| b.z_dil(k, r, t)).values;
        grid.zero_boundary(&mut zt);
        grid.zero_boundary(&mut zd);
        out.push(zt);
        out.push(zd);
    }
    out
}

pub fn fit_bubbles(
    k: &Constants,
    grid: &AxiGrid,
    u: &GridFn,
    initial: &[AxisBubble],
    opts: &FitOptions,
) -> Result<FitResult> {
    if u.len() != grid.len() {
        return Err(Error::Grid("grid function does not match grid".into()));
    }
    if grid.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.n(),
            found: grid.dim().n(),
        });
    }
    if initial.iter().any(|b| !(b.lambda > 0.0 && b.lambda.is_finite() && b.t0.is_finite())) {
        return Err(Error::InvalidArgument("initial bubbles need finite λ > 0 and t₀".into()));
    }
    let dim = k.dim();
    let mut u0 = u.values.clone();
    grid.zero_boundary(&mut u0);
    let u_norm = grid.energy(&u0, &u0).max(0.0).sqrt();
    let tolerance = opts.relative_tolerance * u_norm;

    let mut bubbles = initial.to_vec();
    let eps0 = interaction_eps(dim, &bubbles)?;
    if eps0 > opts.collision_guard {
        return Err(Error::BubbleCollision {
            eps: eps0,
            guard: opts.collision_guard,
        });
    }
    let mut rho = remainder(grid, u, &sample_sum(k, grid, &bubbles));
    let mut g = grid.energy(&rho, &rho);
    let mut trace = vec![g.max(0.0).sqrt()];
    let mut iterations = 0;
    let mut converged = bubbles.is_empty();
    let mut residuals = Vec::new();

    while !converged && iterations < opts.max_iterations {
        let zs = modes(k, grid, &bubbles);
        residuals = zs.iter().map(|z| grid.energy(&rho, z)).collect();
        if residuals.iter().all(|r| r.abs() <= tolerance) {
            converged = true;
            break;
        }
        // Jacobian columns: ∂/∂ln λ = Z_dil, ∂/∂t₀ = λ² Z_t.
        let m = zs.len();
        let cols: Vec<Vec<f64>> = zs
            .iter()
            .enumerate()
            .map(|(a, z)| {
                let scale = if a % 2 == 0 { bubbles[a / 2].lambda.powi(2) } else { 1.0 };
                z.iter().map(|v| scale * v).collect()
            })
            .collect();
        let mut normal = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for a in 0..m {
            rhs[a] = grid.energy(&cols[a], &rho);
            for b in a..m {
                let v = grid.energy(&cols[a], &cols[b]);
                normal[(a, b)] = v;
                normal[(b, a)] = v;
            }
        }
        for a in 0..m {
            normal[(a, a)] *= 1.0 + opts.regularization;
        }
        let step = normal
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .or_else(|| normal.lu().solve(&rhs))
            .ok_or_else(|| Error::NonConvergence {
                solver: "bubble fit (singular normal matrix)",
                iterations,
                residual: g.max(0.0).sqrt(),
            })?;

        let mut accepted = false;
        let mut s = 1.0;
        for _ in 0..40 {
            let trial: Vec<AxisBubble> = bubbles
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    AxisBubble::new(
                        b.lambda * (s * step[2 * i + 1]).exp(),
                        b.t0 + s * step[2 * i],
                    )
                })
                .collect();
            let trho = remainder(grid, u, &sample_sum(k, grid, &trial));
            let tg = grid.energy(&trho, &trho);
            if tg <= g {
                let eps = interaction_eps(dim, &trial)?;
                if eps > opts.collision_guard {
                    return Err(Error::BubbleCollision {
                        eps,
                        guard: opts.collision_guard,
                    });
                }
                bubbles = trial;
                rho = trho;
                accepted = tg < g || s == 1.0;
                g = tg;
                break;
            }
            s *= 0.5;
        }
        iterations += 1;
        trace.push(g.max(0.0).sqrt());
        if !accepted {
            // No descent left: the remainder is as orthogonal as roundoff allows.
            let zs = modes(k, grid, &bubbles);
            residuals = zs.iter().map(|z| grid.energy(&rho, z)).collect();
            converged = residuals.iter().all(|r| r.abs() <= tolerance);
            break;
        }
    }
    if residuals.is_empty() && !bubbles.is_empty() {
        let zs = modes(k, grid, &bubbles);
        residuals = zs.iter().map(|z| grid.energy(&rho, z)).collect();
    }
    if !converged {
        return Err(Error::NonConvergence {
            solver: "bubble fit",
            iterations,
            residual: residuals.iter().fold(0.0, |a: f64, r| a.max(r.abs())),
        });
    }
    Ok(FitResult {
        eps: interaction_eps(dim, &bubbles)?,
        bubbles,
        distance: g.max(0.0).sqrt(),
        residuals,
        tolerance,
        iterations,
        trace,
        converged,
    })
}

/// `‖Lu + |u|^{p-1}u‖_{𝒟⁻¹}`, written around a bubble sum `σ = Σ 𝔤_k U`
/// whose sub-Laplacian `-Σ U_k^p` is used exactly:
/// `(-L)⁻¹(Lu + |u|^{p-1}u) = (-L)⁻¹(|u|^{p-1}u - Σ U_k^p) - (u - σ)`.
/// Only the remainder `u - σ` is differentiated numerically. With no
/// bubbles this is the plain discrete deficit.
pub fn deficit(
    k: &Constants,
    grid: &AxiGrid,
    u: &GridFn,
    background: &[AxisBubble],
    solver: &SolverConfig,
) -> Result<f64> {
    if u.len() != grid.len() {
        return Err(Error::Grid("grid function does not match grid".into()));
    }
    let p = k.p();
    let sigma = sample_sum(k, grid, background);
    let powers = grid.sample(|r, t| background.iter().map(|b| b.u(k, r, t).powf(p)).sum()).values;
    let src: Vec<f64> = u
        .values
        .iter()
        .zip(&powers)
        .map(|(v, s)| v.abs().powf(p - 1.0) * v - s)
        .collect();
    let poisson = Poisson::new(grid, *solver)?;
    let w = poisson.solve(&GridFn::new(src))?;
    let rem = remainder(grid, u, &sigma);
    let diff: Vec<f64> = w.values.iter().zip(&rem).map(|(a, b)| a - b).collect();
    Ok(grid.energy(&diff, &diff).max(0.0).sqrt())
}

/// `Γ`, `Γ|log Γ|^{1/2}` or `Γ^{(n+2)/(2n)}` for `n = 1`, `n = 2`, `n ≥ 3`.
pub fn regime_function(dim: Dim, gamma: f64) -> f64 {
    match dim.n() {
        1 => gamma,
        2 => gamma * gamma.ln().abs().sqrt(),
        n => gamma.powf((n as f64 + 2.0) / (2.0 * n as f64)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityQuotient {
    pub fit: FitResult,
    pub deficit: f64,
    pub regime_value: f64,
    /// `distance / regime_function(deficit)`.
    pub quotient: f64,
}

pub fn stability_quotient(
    k: &Constants,
    grid: &AxiGrid,
    u: &GridFn,
    initial: &[AxisBubble],
    opts: &FitOptions,
    solver: &SolverConfig,
) -> Result<StabilityQuotient> {
    let fit = fit_bubbles(k, grid, u, initial, opts)?;
    let gamma = deficit(k, grid, u, &fit.bubbles, solver)?;
    let regime_value = regime_function(k.dim(), gamma);
    Ok(StabilityQuotient {
        quotient: fit.distance / regime_value,
        fit,
        deficit: gamma,
        regime_value,
    })
}
