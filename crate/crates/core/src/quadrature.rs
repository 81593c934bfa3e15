//! Spectrally accurate quadrature of axisymmetric integrands,
//! `∫_{ℍⁿ} F(|z|, t) dξ = ω_{2n-1} ∫_0^∞ ∫_ℝ F(r, t) r^{2n-1} dt dr`.
//!
//! In `r` the substitution `r = e^s` turns algebraic decay at both ends into
//! exponential decay, and the trapezoid rule in `s` converges exponentially.
//! In `t` the integrand is split by a smooth partition of unity
//! `χ_k ∝ ((t - c_k)² + w_k(r)²)^{-m}` over the concentration centres, and
//! each piece is integrated with `t = c_k + w_k(r) sinh v`, again by the
//! trapezoid rule. The width `w_k(r) = (1 + λ_k²r²)/λ_k²` is the distance of
//! the complex singularities of a bubble `(λ_k, c_k)` from the real `t`-axis,
//! and `χ_k` vanishes at the other bubbles' singularities.
//!
//! The error estimate is the change under halving both steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Dim;
use crate::sampling::thread_count;

/// A concentration centre `(0, t)` of a bubble with scale `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Core {
    pub t: f64,
    pub lambda: f64,
}

impl Core {
    pub fn new(t: f64, lambda: f64) -> Self {
        Core { t, lambda }
    }

    #[inline]
    fn width(&self, r: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        (1.0 + l2 * r * r) / l2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Relative accuracy requested from the step-halving estimate.
    pub tolerance: f64,
    /// Initial step in `s = ln r` and in the `sinh` variable.
    pub initial_step: f64,
    pub max_halvings: usize,
    /// Half-width of the range of `ln(λ r)` covered.
    pub log_r_span: f64,
    /// Half-width of the range of `v` covered in each `t` piece.
    pub v_span: f64,
    pub partition_power: i32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            tolerance: 1e-8,
            initial_step: 0.5,
            max_halvings: 5,
            log_r_span: 21.0,
            v_span: 21.0,
            partition_power: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    /// `|I(h) - I(h/2)|` at the last halving.
    pub error: f64,
    pub step: f64,
    pub evaluations: usize,
}

impl QuadResult {
    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            self.error
        } else {
            self.error / self.value.abs()
        }
    }
}

#[derive(Clone, Debug)]
pub struct AxisQuadrature {
    dim: Dim,
    cores: Vec<Core>,
    opts: QuadratureOptions,
}

impl AxisQuadrature {
    pub fn new(dim: Dim, cores: Vec<Core>, opts: QuadratureOptions) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidArgument("quadrature needs at least one core".into()));
        }
        if cores.iter().any(|c| !(c.lambda > 0.0 && c.t.is_finite())) {
            return Err(Error::InvalidArgument("core scales must be positive".into()));
        }
        if !(opts.tolerance > 0.0 && opts.initial_step > 0.0) {
            return Err(Error::InvalidArgument("quadrature tolerance and step must be positive".into()));
        }
        Ok(AxisQuadrature { dim, cores, opts })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    /// Integrate `F(r, t)` over ℍⁿ, halving the steps until the change drops
    /// below the tolerance.
    pub fn integrate<F>(&self, f: F) -> Result<QuadResult>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let mut h = self.opts.initial_step;
        let mut prev = self.rule(&f, h);
        let mut evaluations = prev.1;
        for _ in 0..self.opts.max_halvings {
            h *= 0.5;
            let (value, evals) = self.rule(&f, h);
            evaluations += evals;
            let error = (value - prev.0).abs();
            if !value.is_finite() {
                return Err(Error::Quadrature("integrand produced a non-finite value".into()));
            }
            if error <= self.opts.tolerance * value.abs() || (value == 0.0 && error == 0.0) {
                return Ok(QuadResult {
                    value,
                    error,
                    step: h,
                    evaluations,
                });
            }
            prev = (value, evals);
        }
        Err(Error::Quadrature(format!(
            "no convergence to relative {:.1e} after {} halvings (last value {:.6e})",
            self.opts.tolerance, self.opts.max_halvings, prev.0
        )))
    }

    fn rule<F>(&self, f: &F, h: f64) -> (f64, usize)
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let lmin = self.cores.iter().map(|c| c.lambda).fold(f64::INFINITY, f64::min);
        let lmax = self.cores.iter().map(|c| c.lambda).fold(0.0, f64::max);
        let s_lo = -(lmax.ln()) - self.opts.log_r_span;
        let s_hi = -(lmin.ln()) + self.opts.log_r_span;
        let ns = ((s_hi - s_lo) / h).ceil() as usize + 1;
        let nv = (self.opts.v_span / h).ceil() as usize;
        let two_n = 2 * self.dim.n();
        let m = self.opts.partition_power;
        let cores = &self.cores;

        let row = |i: usize| -> f64 {
            let s = s_lo + i as f64 * h;
            let r = s.exp();
            let widths: Vec<f64> = cores.iter().map(|c| c.width(r)).collect();
            let mut total = 0.0;
            for (k, ck) in cores.iter().enumerate() {
                let wk = widths[k];
                let mut acc = 0.0;
                for jv in -(nv as i64)..=(nv as i64) {
                    let v = jv as f64 * h;
                    let (sh, ch) = (v.sinh(), v.cosh());
                    let t = ck.t + wk * sh;
                    let chi = if cores.len() == 1 {
                        1.0
                    } else {
                        // χ_k = 1 / Σ_l (d_k / d_l)^m with d_l = (t-c_l)² + w_l².
                        let dk = (t - ck.t).powi(2) + wk * wk;
                        let mut denom = 0.0;
                        for (l, cl) in cores.iter().enumerate() {
                            let dl = (t - cl.t).powi(2) + widths[l] * widths[l];
                            denom += (dk / dl).powi(m);
                        }
                        1.0 / denom
                    };
                    if chi < 1e-300 {
                        continue;
                    }
                    let val = f(r, t);
                    acc += val * chi * wk * ch;
                }
                total += acc;
            }
            total * h * r.powi(two_n as i32)
        };

        let sum = par_sum(ns, &row);
        let evals = ns * (2 * nv + 1) * cores.len();
        (sum * h * self.dim.sphere_area(), evals)
    }
}

/// `Σ_{i<n} row(i)`, computed in parallel and summed in index order.
fn par_sum<R>(n: usize, row: &R) -> f64
where
    R: Fn(usize) -> f64 + Sync,
{
    let workers = thread_count().min(n.max(1));
    if workers <= 1 {
        return (0..n).map(row).sum();
    }
    let mut parts = vec![0.0; n];
    let chunk = n.div_ceil(workers);
    std::thread::scope(|scope| {
        for (w, out) in parts.chunks_mut(chunk).enumerate() {
            scope.spawn(move || {
                for (off, slot) in out.iter_mut().enumerate() {
                    *slot = row(w * chunk + off);
                }
            });
        }
    });
    parts.iter().sum()
}
