//! Preconditioned conjugate gradients on full-grid vectors.
//!
//! Convergence is measured in the preconditioner norm, `‖r‖_M = (rᵀMr)^{1/2}`
//! relative to `‖b‖_M`. With the fast-diagonalisation preconditioner
//! `M ≈ A⁻¹` this is the `𝒟⁻¹` norm of the residual, i.e. the energy norm of
//! the error, which stays meaningful on strongly graded meshes where the
//! Euclidean residual bottoms out at roundoff.

use crate::error::{Error, Result};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    /// Final `‖b - Ax‖_M / ‖b‖_M`, recomputed from scratch.
    pub relative_residual: f64,
}

const MAX_RESTARTS: usize = 5;

/// Solve `A x = b` for symmetric positive definite `A`, starting from zero.
pub(crate) fn pcg(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, CgStats)> {
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut rz = dot(&r, &z);
    if rz <= 0.0 {
        return Ok((x, CgStats::default()));
    }
    let bnorm = rz.sqrt();
    let mut p = z.clone();
    let mut iterations = 0;
    let mut restarts = 0;
    while iterations < max_iterations {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NonConvergence {
                solver: "conjugate gradients (operator not positive definite)",
                iterations,
                residual: rz.max(0.0).sqrt() / bnorm,
            });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        iterations += 1;
        z = precond(&r);
        let mut rz_new = dot(&r, &z);
        if rz_new.max(0.0).sqrt() <= tol * bnorm {
            // Confirm with the true residual before accepting.
            let ax = apply(&x);
            r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            z = precond(&r);
            rz_new = dot(&r, &z);
            let true_res = rz_new.max(0.0).sqrt() / bnorm;
            if true_res <= tol {
                return Ok((
                    x,
                    CgStats {
                        iterations,
                        relative_residual: true_res,
                    },
                ));
            }
            restarts += 1;
            if restarts > MAX_RESTARTS {
                return Err(Error::NonConvergence {
                    solver: "conjugate gradients (stagnated at roundoff)",
                    iterations,
                    residual: true_res,
                });
            }
            // Restart the search direction from the true residual.
            p = z.clone();
            rz = rz_new;
            continue;
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::NonConvergence {
        solver: "conjugate gradients",
        iterations,
        residual: rz.max(0.0).sqrt() / bnorm,
    })
}
