//! Spectral lower bound for `I - PK` on `ℱ⊥`.
//!
//! `K = p(-Δ)⁻¹σ^{p-1}` is self-adjoint in the `𝒟¹` inner product, and so is
//! `PKP`. The smallest singular value of `I - PK` on `ℱ⊥` is therefore
//! `min |1 - θ|` over the spectrum of `PKP` restricted to `ℱ⊥`, which Lanczos
//! in the `𝒟¹` inner product resolves from a handful of Poisson solves.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::modes::ModeBasis;
use super::rho::ProjectedK;
use super::{Poisson, SolverConfig};
use crate::bubbles::{BubbleConfig, Constants};
use crate::error::{Error, Result};
use crate::fields;
use crate::grid::AxiGrid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityOptions {
    /// Restrict to the orthogonal complement of the modes.
    pub projected: bool,
    pub max_steps: usize,
    /// Relative Ritz residual below which a Ritz value counts as converged.
    pub ritz_tolerance: f64,
    pub seed: u64,
}

impl Default for CoercivityOptions {
    fn default() -> Self {
        CoercivityOptions {
            projected: true,
            max_steps: 60,
            ritz_tolerance: 1e-6,
            seed: 17,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoercivityReport {
    /// `min |1 - θ|` over converged Ritz values `θ`.
    pub mu_min: f64,
    /// The Ritz value attaining `mu_min`.
    pub critical_ritz_value: f64,
    /// Converged Ritz values in decreasing order.
    pub ritz_values: Vec<f64>,
    pub steps: usize,
    pub projected: bool,
}

pub fn coercivity_estimate(
    k: &Constants,
    cfg: &BubbleConfig,
    grid: &AxiGrid,
    solver: &SolverConfig,
    opts: &CoercivityOptions,
) -> Result<CoercivityReport> {
    let poisson = Poisson::new(grid, *solver)?;
    let basis = ModeBasis::new(k, cfg, grid)?;
    let sigma = fields::sample_sigma(k, cfg, grid)?;
    let kop = ProjectedK::new(
        &poisson,
        if opts.projected { Some(&basis) } else { None },
        k.p(),
        &sigma,
    );
    let energy = |a: &[f64], b: &[f64]| grid.energy(a, b);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    grid.zero_boundary(&mut v);
    // Smooth the start vector so it lives in 𝒟¹ at the grid scale.
    let (mut v, _) = poisson.solve_stiffness(&poisson.mass(&v))?;
    if opts.projected {
        basis.project_in_place(grid, &mut v);
    }
    let nv = energy(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);

    let mut vs: Vec<Vec<f64>> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut result = None;
    for step in 0..opts.max_steps {
        let mut w = kop.apply(&vs[step])?;
        let a = energy(&w, &vs[step]);
        alpha.push(a);
        for _ in 0..2 {
            for q in &vs {
                let c = energy(&w, q);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
            if opts.projected {
                basis.project_in_place(grid, &mut w);
            }
        }
        let b = energy(&w, &w).max(0.0).sqrt();
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(1e-300);
        let mut converged: Vec<f64> = (0..m)
            .filter(|&i| (b * eig.eigenvectors[(m - 1, i)]).abs() <= opts.ritz_tolerance * scale)
            .map(|i| eig.eigenvalues[i])
            .collect();
        converged.sort_by(|x, y| y.partial_cmp(x).expect("finite Ritz values"));
        let nearest = converged
            .iter()
            .copied()
            .min_by(|x, y| (1.0 - x).abs().partial_cmp(&(1.0 - y).abs()).expect("finite"));
        // Done when the Ritz value closest to 1 has converged and every
        // unconverged Ritz value is farther from 1 than it.
        if let Some(theta) = nearest {
            let unconverged_closer = (0..m).any(|i| {
                let th = eig.eigenvalues[i];
                !converged.contains(&th) && (1.0 - th).abs() < (1.0 - theta).abs()
            });
            if !unconverged_closer {
                result = Some(CoercivityReport {
                    mu_min: (1.0 - theta).abs(),
                    critical_ritz_value: theta,
                    ritz_values: converged.clone(),
                    steps: m,
                    projected: opts.projected,
                });
                if step >= 8 {
                    break;
                }
            } else {
                result = None;
            }
        }
        if b <= 1e-14 * scale {
            break;
        }
        beta.push(b);
        vs.push(w.iter().map(|x| x / b).collect());
    }
    result.ok_or(Error::NonConvergence {
        solver: "lanczos",
        iterations: alpha.len(),
        residual: f64::NAN,
    })
}
