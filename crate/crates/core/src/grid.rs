//! Axisymmetric `(r, t)` grids, `r = |z|`, for functions on ℍⁿ that depend
//! only on `|z|` and `t`.
//!
//! On such functions `|Xu|² = u_r² + 4r²u_t²` and the sub-Laplacian reduces
//! to `Lu = u_rr + (2n-1)/r u_r + 4r²u_tt`, i.e.
//! `r^{2n-1} Lu = ∂_r(r^{2n-1}u_r) + ∂_t(4r^{2n+1}u_t)`, with Haar measure
//! `ω_{2n-1} r^{2n-1} dr dt`.
//!
//! The discretisation is vertex-centred finite volumes. Dual cells are bounded
//! by midpoints between nodes, by `r = 0` (even reflection through the axis)
//! and by the box edges. Cell volumes and face fluxes integrate the measure
//! exactly in `r`, so the discrete energy
//! `E(u, v) = Σ_edges c_e (Δ_e u)(Δ_e v)` is exactly symmetric and the cell
//! volumes add up to the Haar volume of the box. The outer faces
//! `r = R`, `t = T_min`, `t = T_max` carry homogeneous Dirichlet data in solves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Dim, HPoint};

/// A concentration centre `(0, t)` with the core width in `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCenter {
    pub t: f64,
    pub scale: f64,
}

/// Parameters that determine a grid completely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub r_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub nr: usize,
    pub nt: usize,
    /// Width of the near-axis region resolved uniformly in `r`.
    pub r_scale: f64,
    pub centers: Vec<GridCenter>,
}

pub const MIN_RESOLUTION: usize = 16;

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        Dim::new(self.n)?;
        let finite = [self.r_max, self.t_min, self.t_max, self.r_scale]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.r_max <= 0.0 || self.r_scale <= 0.0 {
            return Err(Error::Grid(format!(
                "box radius and r scale must be positive (R={}, a={})",
                self.r_max, self.r_scale
            )));
        }
        if self.t_max <= self.t_min {
            return Err(Error::Grid(format!(
                "empty t-range [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.nr < MIN_RESOLUTION || self.nt < MIN_RESOLUTION {
            return Err(Error::Grid(format!(
                "resolution must be at least {MIN_RESOLUTION} per direction, got {}x{}",
                self.nr, self.nt
            )));
        }
        if self.centers.is_empty() {
            return Err(Error::Grid("at least one concentration centre is required".into()));
        }
        for c in &self.centers {
            if !(c.t > self.t_min && c.t < self.t_max) {
                return Err(Error::Grid(format!(
                    "centre t={} outside the box [{}, {}]",
                    c.t, self.t_min, self.t_max
                )));
            }
            if !(c.scale > 0.0 && c.scale.is_finite()) {
                return Err(Error::Grid(format!("centre scale must be positive, got {}", c.scale)));
            }
        }
        Ok(())
    }
}

/// `r`-nodes `r_i = a sinh(s_i asinh(R/a))`, `s_i = (i+½)/(N-½)`: uniform
/// near the axis with spacing growing geometrically beyond `a`, the first
/// node half a step from `r = 0` and the last node on `r = R`.
fn r_nodes(r_max: f64, a: f64, count: usize) -> Vec<f64> {
    let span = (r_max / a).asinh();
    let mut r: Vec<f64> = (0..count)
        .map(|i| {
            let s = (i as f64 + 0.5) / (count as f64 - 0.5);
            a * (s * span).sinh()
        })
        .collect();
    r[count - 1] = r_max;
    r
}

/// `t`-nodes equidistributing `F(t) = Σ_c asinh((t - t_c)/a_c)`, which puts
/// spacing `≈ a_c` inside each core and geometric growth away from it.
fn t_nodes(t_min: f64, t_max: f64, centers: &[GridCenter], count: usize) -> Vec<f64> {
    let cdf = |t: f64| -> f64 {
        centers
            .iter()
            .map(|c| ((t - c.t) / c.scale).asinh())
            .sum()
    };
    let (f_lo, f_hi) = (cdf(t_min), cdf(t_max));
    let mut out = Vec::with_capacity(count);
    out.push(t_min);
    for j in 1..count - 1 {
        let target = f_lo + (f_hi - f_lo) * j as f64 / (count - 1) as f64;
        let (mut lo, mut hi) = (t_min, t_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + mid.abs()) {
                break;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out.push(t_max);
    out
}

/// Axisymmetric tensor grid with finite-volume weights.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiGrid {
    dim: Dim,
    r: Vec<f64>,
    t: Vec<f64>,
    /// Radial measure of each dual cell, `ω ∫ r^{2n-1} dr`.
    vr: Vec<f64>,
    /// Length in `t` of each dual cell.
    dt: Vec<f64>,
    /// Radial edge conductance per unit `t`-length, `ω r_f^{2n-1}/(r_{i+1}-r_i)`.
    cr: Vec<f64>,
    /// Radial factor of the `t`-fluxes, `4ω ∫ r^{2n+1} dr` over the dual cell.
    br: Vec<f64>,
    /// `1/(t_{j+1} - t_j)`.
    inv_ht: Vec<f64>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0]) && v.iter().all(|x| x.is_finite())
}

impl AxiGrid {
    pub fn build(spec: &GridSpec) -> Result<Self> {
        spec.validate()?;
        let dim = Dim::new(spec.n)?;
        let r = r_nodes(spec.r_max, spec.r_scale, spec.nr);
        let t = t_nodes(spec.t_min, spec.t_max, &spec.centers, spec.nt);
        AxiGrid::from_nodes(dim, r, t)
    }

    /// Rebuild a grid from its node coordinates. The last `r`-node is the
    /// outer radius and the first and last `t`-nodes are the box edges.
    pub fn from_nodes(dim: Dim, r: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        if r.len() < 3 || t.len() < 3 {
            return Err(Error::Grid(format!(
                "grid too small for the stencil: {}x{}",
                r.len(),
                t.len()
            )));
        }
        if r[0] <= 0.0 || !strictly_increasing(&r) {
            return Err(Error::Grid("r-nodes must be positive and strictly increasing".into()));
        }
        if !strictly_increasing(&t) {
            return Err(Error::Grid("t-nodes must be strictly increasing".into()));
        }
        let n = dim.n() as i32;
        let omega = dim.sphere_area();
        let nr = r.len();
        let nt = t.len();

        let mut rf = Vec::with_capacity(nr + 1);
        rf.push(0.0);
        for i in 0..nr - 1 {
            rf.push(0.5 * (r[i] + r[i + 1]));
        }
        rf.push(r[nr - 1]);
        let vr: Vec<f64> = (0..nr)
            .map(|i| omega * (rf[i + 1].powi(2 * n) - rf[i].powi(2 * n)) / (2 * n) as f64)
            .collect();
        let br: Vec<f64> = (0..nr)
            .map(|i| {
                4.0 * omega * (rf[i + 1].powi(2 * n + 2) - rf[i].powi(2 * n + 2))
                    / (2 * n + 2) as f64
            })
            .collect();
        let cr: Vec<f64> = (0..nr - 1)
            .map(|i| omega * rf[i + 1].powi(2 * n - 1) / (r[i + 1] - r[i]))
            .collect();

        let mut tf = Vec::with_capacity(nt + 1);
        tf.push(t[0]);
        for j in 0..nt - 1 {
            tf.push(0.5 * (t[j] + t[j + 1]));
        }
        tf.push(t[nt - 1]);
        let dt: Vec<f64> = (0..nt).map(|j| tf[j + 1] - tf[j]).collect();
        let inv_ht: Vec<f64> = (0..nt - 1).map(|j| 1.0 / (t[j + 1] - t[j])).collect();

        Ok(AxiGrid {
            dim,
            r,
            t,
            vr,
            dt,
            cr,
            br,
            inv_ht,
        })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn nr(&self) -> usize {
        self.r.len()
    }

    pub fn nt(&self) -> usize {
        self.t.len()
    }

    pub fn len(&self) -> usize {
        self.r.len() * self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn r_nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn r_max(&self) -> f64 {
        self.r[self.r.len() - 1]
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    /// Flat index of node `(i_r, j_t)`; storage is row-major in `r`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.t.len() + j
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i + 1 == self.r.len() || j == 0 || j + 1 == self.t.len()
    }

    /// Haar volume of the dual cell of node `(i, j)`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.vr[i] * self.dt[j]
    }

    pub fn weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len());
        for i in 0..self.nr() {
            for j in 0..self.nt() {
                w.push(self.weight(i, j));
            }
        }
        w
    }

    /// Haar volume of `{|z| <= R} × [T_min, T_max]`.
    pub fn box_volume(&self) -> f64 {
        let n = self.dim.n() as i32;
        let (t0, t1) = self.t_range();
        self.dim.sphere_area() * self.r_max().powi(2 * n) / (2 * n) as f64 * (t1 - t0)
    }

    /// Full-coordinate point `(x_1 = r, 0, …, t)` representing node `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> HPoint {
        let mut flat = vec![0.0; self.dim.coords()];
        flat[0] = self.r[i];
        flat[2 * self.dim.n()] = self.t[j];
        HPoint::from_flat(&flat).expect("finite nodes")
    }

    pub(crate) fn t_lengths(&self) -> &[f64] {
        &self.dt
    }

    pub(crate) fn radial_conductance(&self) -> &[f64] {
        &self.cr
    }

    pub(crate) fn t_flux_factor(&self) -> &[f64] {
        &self.br
    }

    pub(crate) fn inv_t_steps(&self) -> &[f64] {
        &self.inv_ht
    }

    fn check(&self, u: &GridFn) -> Result<()> {
        if u.values.len() != self.len() {
            return Err(Error::Grid(format!(
                "grid function has {} values, grid has {} nodes",
                u.values.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Evaluate `f(r, t)` at every node.
    pub fn sample(&self, mut f: impl FnMut(f64, f64) -> f64) -> GridFn {
        let mut values = Vec::with_capacity(self.len());
        for &r in &self.r {
            for &t in &self.t {
                values.push(f(r, t));
            }
        }
        GridFn::new(values)
    }

    /// Net outflow `Σ_nb c (u_node - u_nb)` at every node. This is `A u` for
    /// the stiffness matrix `A` of the energy form on the whole grid.
    pub fn flux(&self, u: &[f64]) -> Vec<f64> {
        let nr = self.nr();
        let nt = self.nt();
        let mut out = vec![0.0; u.len()];
        for i in 0..nr {
            let row = i * nt;
            let b = self.br[i];
            for j in 0..nt - 1 {
                let c = b * self.inv_ht[j];
                let d = c * (u[row + j] - u[row + j + 1]);
                out[row + j] += d;
                out[row + j + 1] -= d;
            }
            if i + 1 < nr {
                let cr = self.cr[i];
                let next = row + nt;
                for j in 0..nt {
                    let d = cr * self.dt[j] * (u[row + j] - u[next + j]);
                    out[row + j] += d;
                    out[next + j] -= d;
                }
            }
        }
        out
    }

    /// Discrete `Lu`; zero on the outer boundary nodes.
    pub fn apply_sublap(&self, u: &GridFn) -> Result<GridFn> {
        self.check(u)?;
        let flux = self.flux(&u.values);
        let mut out = vec![0.0; self.len()];
        for i in 0..self.nr() {
            for j in 0..self.nt() {
                if !self.is_boundary(i, j) {
                    let k = self.index(i, j);
                    out[k] = -flux[k] / self.weight(i, j);
                }
            }
        }
        Ok(GridFn::new(out))
    }

    /// `∫ u dξ` with the dual-cell weights.
    pub fn integrate(&self, u: &GridFn) -> Result<f64> {
        self.check(u)?;
        Ok(self.integrate_slice(&u.values))
    }

    pub(crate) fn integrate_slice(&self, u: &[f64]) -> f64 {
        let nt = self.nt();
        let mut total = 0.0;
        for (i, &vr) in self.vr.iter().enumerate() {
            let row = &u[i * nt..(i + 1) * nt];
            let s: f64 = row.iter().zip(&self.dt).map(|(v, d)| v * d).sum();
            total += vr * s;
        }
        total
    }

    /// `∫ u v dξ`.
    pub fn l2_inner(&self, u: &GridFn, v: &GridFn) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.weighted_dot(&u.values, &v.values))
    }

    pub(crate) fn weighted_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        let nt = self.nt();
        let mut total = 0.0;
        for (i, &vr) in self.vr.iter().enumerate() {
            let s: f64 = (0..nt)
                .map(|j| u[i * nt + j] * v[i * nt + j] * self.dt[j])
                .sum();
            total += vr * s;
        }
        total
    }

    /// Energy form `Σ_edges c (Δu)(Δv)`, the discrete `∫ Xu·Xv dξ`.
    pub(crate) fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        let nr = self.nr();
        let nt = self.nt();
        let mut total = 0.0;
        for i in 0..nr {
            let row = i * nt;
            let mut acc = 0.0;
            for j in 0..nt - 1 {
                acc += self.inv_ht[j] * (u[row + j + 1] - u[row + j]) * (v[row + j + 1] - v[row + j]);
            }
            total += self.br[i] * acc;
            if i + 1 < nr {
                let next = row + nt;
                let mut acc = 0.0;
                for j in 0..nt {
                    acc += self.dt[j] * (u[next + j] - u[row + j]) * (v[next + j] - v[row + j]);
                }
                total += self.cr[i] * acc;
            }
        }
        total
    }

    /// `(u, v)_{𝒟¹} = ∫ Xu·Xv dξ`, which equals `∫ u (-Lv)` for functions
    /// vanishing on the outer boundary.
    pub fn d1_inner(&self, u: &GridFn, v: &GridFn) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        for (name, f) in [("u", u), ("v", v)] {
            let decay = self.boundary_ratio(f);
            if decay > 1e-3 {
                log::warn!("d1_inner: {name} is {decay:.2e} of its maximum on the outer boundary");
            }
        }
        Ok(self.energy(&u.values, &v.values))
    }

    pub fn d1_norm(&self, u: &GridFn) -> Result<f64> {
        Ok(self.d1_inner(u, u)?.max(0.0).sqrt())
    }

    /// Largest boundary value relative to the largest value overall.
    pub fn boundary_ratio(&self, u: &GridFn) -> f64 {
        let max = u.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max == 0.0 {
            return 0.0;
        }
        let mut b: f64 = 0.0;
        for i in 0..self.nr() {
            for j in 0..self.nt() {
                if self.is_boundary(i, j) {
                    b = b.max(u.values[self.index(i, j)].abs());
                }
            }
        }
        b / max
    }

    /// Zero the outer boundary values in place.
    pub fn zero_boundary(&self, u: &mut [f64]) {
        let nt = self.nt();
        let nr = self.nr();
        for i in 0..nr {
            u[i * nt] = 0.0;
            u[i * nt + nt - 1] = 0.0;
        }
        for j in 0..nt {
            u[(nr - 1) * nt + j] = 0.0;
        }
    }
}

/// `build_grid(dim, R, T_min, T_max, resolution, centres)` with unit core
/// widths in `r` and `t`.
pub fn build_grid(
    dim: Dim,
    r_max: f64,
    t_min: f64,
    t_max: f64,
    resolution: usize,
    centers: &[f64],
) -> Result<AxiGrid> {
    AxiGrid::build(&GridSpec {
        n: dim.n(),
        r_max,
        t_min,
        t_max,
        nr: resolution,
        nt: resolution,
        r_scale: 1.0,
        centers: centers
            .iter()
            .map(|&t| GridCenter { t, scale: 1.0 })
            .collect(),
    })
}

/// Values of an axisymmetric function at the nodes of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFn {
    pub values: Vec<f64>,
    /// Optional name of the analytic source (`U`, `Z`, `f`, `rho`, …).
    pub tag: Option<String>,
}

impl GridFn {
    pub fn new(values: Vec<f64>) -> Self {
        GridFn { values, tag: None }
    }

    pub fn zeros(len: usize) -> Self {
        GridFn::new(vec![0.0; len])
    }

    pub fn tagged(mut self, tag: &str) -> Self {
        self.tag = Some(tag.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFn {
        GridFn::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &GridFn, f: impl Fn(f64, f64) -> f64) -> GridFn {
        assert_eq!(self.len(), other.len(), "grid functions on different grids");
        GridFn::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &GridFn, b: f64) -> GridFn {
        self.zip_map(other, |x, y| a * x + b * y)
    }

    pub fn scaled(&self, a: f64) -> GridFn {
        self.map(|v| a * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
