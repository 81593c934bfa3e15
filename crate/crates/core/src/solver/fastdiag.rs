//! Direct solver for the Dirichlet stiffness matrix by fast diagonalisation.
//!
//! On the interior unknowns the stiffness matrix factors as
//! `A = K_r ⊗ D_t + B_r ⊗ K_t` with `D_t`, `B_r` diagonal and `K_r`, `K_t`
//! tridiagonal. Diagonalising `S = D_t^{-1/2} K_t D_t^{-1/2} = V Λ Vᵀ` once
//! reduces `A x = b` to one tridiagonal solve `(K_r + Λ_k B_r) w_k = ĉ_k`
//! per `t`-mode.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::grid::AxiGrid;

pub(crate) struct FastDiag {
    /// Interior sizes: `q` radial rows (`i < nr-1`), `m` t-columns (`0 < j < nt-1`).
    q: usize,
    m: usize,
    nt: usize,
    inv_sqrt_d: Vec<f64>,
    v: DMatrix<f64>,
    /// Thomas factors per mode: modified diagonal and multipliers.
    diag: Vec<Vec<f64>>,
    lower: Vec<Vec<f64>>,
    off: Vec<f64>,
}

impl FastDiag {
    pub(crate) fn new(grid: &AxiGrid) -> Self {
        let nr = grid.nr();
        let nt = grid.nt();
        let q = nr - 1;
        let m = nt - 2;
        let dt = grid.t_lengths();
        let inv_ht = grid.inv_t_steps();
        let cr = grid.radial_conductance();
        let br = grid.t_flux_factor();

        let inv_sqrt_d: Vec<f64> = (1..nt - 1).map(|j| 1.0 / dt[j].sqrt()).collect();
        let mut s = DMatrix::<f64>::zeros(m, m);
        for a in 0..m {
            let j = a + 1;
            s[(a, a)] = (inv_ht[j - 1] + inv_ht[j]) * inv_sqrt_d[a] * inv_sqrt_d[a];
            if a + 1 < m {
                let v = -inv_ht[j] * inv_sqrt_d[a] * inv_sqrt_d[a + 1];
                s[(a, a + 1)] = v;
                s[(a + 1, a)] = v;
            }
        }
        let eig = SymmetricEigen::new(s);

        let kr_diag: Vec<f64> = (0..q)
            .map(|i| cr[i] + if i > 0 { cr[i - 1] } else { 0.0 })
            .collect();
        let off: Vec<f64> = (0..q.saturating_sub(1)).map(|i| -cr[i]).collect();
        let mut diag = Vec::with_capacity(m);
        let mut lower = Vec::with_capacity(m);
        for k in 0..m {
            let lam = eig.eigenvalues[k];
            let mut d = Vec::with_capacity(q);
            let mut l = Vec::with_capacity(q);
            d.push(kr_diag[0] + lam * br[0]);
            l.push(0.0);
            for i in 1..q {
                let mult = off[i - 1] / d[i - 1];
                l.push(mult);
                d.push(kr_diag[i] + lam * br[i] - mult * off[i - 1]);
            }
            diag.push(d);
            lower.push(l);
        }
        FastDiag {
            q,
            m,
            nt,
            inv_sqrt_d,
            v: eig.eigenvectors,
            diag,
            lower,
            off,
        }
    }

    /// Solve `A x = b` on the interior; `b` and the result are full-grid
    /// vectors whose boundary entries are ignored and set to zero.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (q, m, nt) = (self.q, self.m, self.nt);
        let mut rhs = DMatrix::<f64>::zeros(q, m);
        for i in 0..q {
            for a in 0..m {
                rhs[(i, a)] = b[i * nt + a + 1] * self.inv_sqrt_d[a];
            }
        }
        let mut w = rhs * &self.v;
        let data = w.as_mut_slice();
        for k in 0..m {
            // Column-major storage: mode k occupies one contiguous column.
            let x = &mut data[k * q..(k + 1) * q];
            let (d, l) = (&self.diag[k], &self.lower[k]);
            for i in 1..q {
                x[i] -= l[i] * x[i - 1];
            }
            x[q - 1] /= d[q - 1];
            for i in (0..q - 1).rev() {
                x[i] = (x[i] - self.off[i] * x[i + 1]) / d[i];
            }
        }
        let z = w * self.v.transpose();
        let mut out = vec![0.0; b.len()];
        for i in 0..q {
            for a in 0..m {
                out[i * nt + a + 1] = z[(i, a)] * self.inv_sqrt_d[a];
            }
        }
        out
    }
}
