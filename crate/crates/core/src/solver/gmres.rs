//! Restarted GMRES with a caller-supplied inner product.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GmresStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solve `M x = b`, starting from zero, with residuals measured in the norm
/// of `inner`.
pub(crate) fn gmres(
    apply: impl Fn(&[f64]) -> Result<Vec<f64>>,
    inner: impl Fn(&[f64], &[f64]) -> f64,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> Result<(Vec<f64>, GmresStats)> {
    let norm = |v: &[f64]| inner(v, v).max(0.0).sqrt();
    let bnorm = norm(b);
    let mut x = vec![0.0; b.len()];
    if bnorm == 0.0 {
        return Ok((x, GmresStats::default()));
    }
    let mut total = 0;
    let mut r = b.to_vec();
    let mut rnorm = bnorm;
    while total < max_iterations {
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / rnorm).collect()];
        // Hessenberg columns, Givens rotations and the rotated right side.
        let mut h: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<(f64, f64)> = Vec::new();
        let mut g = vec![rnorm];
        let mut k = 0;
        while k < restart && total < max_iterations {
            let mut w = apply(&basis[k])?;
            let mut col = vec![0.0; k + 2];
            // Modified Gram–Schmidt, repeated once for stability.
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = inner(&w, v);
                    col[i] += c;
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= c * vi;
                    }
                }
            }
            let wn = norm(&w);
            col[k + 1] = wn;
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = c * a + s * bb;
                col[i + 1] = -s * a + c * bb;
            }
            let (a, bb) = (col[k], col[k + 1]);
            let d = a.hypot(bb);
            let (c, s) = if d == 0.0 { (1.0, 0.0) } else { (a / d, bb / d) };
            col[k] = d;
            col[k + 1] = 0.0;
            cs.push((c, s));
            let gk = g[k];
            g[k] = c * gk;
            g.push(-s * gk);
            h.push(col);
            k += 1;
            total += 1;
            let res = g[k].abs();
            if res <= tol * bnorm || wn <= 1e-300 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
        let mx = apply(&x)?;
        r = b.iter().zip(&mx).map(|(bi, mi)| bi - mi).collect();
        rnorm = norm(&r);
        if rnorm <= tol * bnorm {
            return Ok((
                x,
                GmresStats {
                    iterations: total,
                    relative_residual: rnorm / bnorm,
                },
            ));
        }
    }
    Err(Error::NonConvergence {
        solver: "gmres",
        iterations: total,
        residual: rnorm / bnorm,
    })
}
