//! Pointwise residuals of the bubble equation and of its linearisation,
//! and the group-law identities, at random test points.

use serde::{Deserialize, Serialize};

use crate::bubbles::{eval_gauge_u, eval_u, eval_z, sample_points, Constants};
use crate::derivatives;
use crate::error::Result;
use crate::group::{compose, dilate, gauge_apply, gauge_compose, hnorm, inverse, Dim, Gauge, HPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualCheck {
    /// Largest residual divided by `U^p` at the same point.
    pub max_relative: f64,
    pub points: usize,
    /// Mode index attaining the maximum (0 for the bubble equation).
    pub worst_mode: usize,
}

/// `max |ΔU + U^p| / U^p` over `count` points with coordinates in
/// `[-scale, scale]`, with `Δ` by finite differences along the flows.
pub fn bubble_equation_residual(k: &Constants, count: usize, scale: f64, seed: u64) -> ResidualCheck {
    let p = k.p();
    let u = |b: &HPoint| eval_u(k, b);
    let max_relative = sample_points(k.dim(), count, scale, seed)
        .iter()
        .map(|a| {
            let h = derivatives::default_step(hnorm(a));
            let up = u(a).powf(p);
            (derivatives::sublaplacian(u, a, h) + up).abs() / up
        })
        .fold(0.0, f64::max);
    ResidualCheck {
        max_relative,
        points: count,
        worst_mode: 0,
    }
}

/// `max |ΔZ^a + pU^{p-1}Z^a| / U^p` over all modes `a` of the bubble with
/// gauge `g`.
pub fn mode_equation_residual(k: &Constants, g: &Gauge, count: usize, scale: f64, seed: u64) -> Result<ResidualCheck> {
    let p = k.p();
    let mut worst = 0.0;
    let mut worst_mode = 0;
    for a in sample_points(k.dim(), count, scale, seed) {
        let u = eval_gauge_u(k, g, &a)?;
        let h = derivatives::default_step(hnorm(&a));
        for index in 1..=k.dim().modes() {
            let z = |b: &HPoint| eval_z(k, index, g, b).expect("dimension checked");
            let res = (derivatives::sublaplacian(z, &a, h) + p * u.powf(p - 1.0) * z(&a)).abs() / u.powf(p);
            if res > worst {
                worst = res;
                worst_mode = index;
            }
        }
    }
    Ok(ResidualCheck {
        max_relative: worst,
        points: count,
        worst_mode,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupLawCheck {
    pub associativity: f64,
    pub inverse: f64,
    /// `|δ_μ(a∘b) - δ_μa ∘ δ_μb|`.
    pub dilation_homomorphism: f64,
    /// `| |δ_μ a| - μ|a| | / μ|a|`.
    pub norm_homogeneity: f64,
    /// `|g₁g₂ · a - g₂·(g₁·a)|`.
    pub gauge_composition: f64,
    pub points: usize,
}

impl GroupLawCheck {
    pub fn max(&self) -> f64 {
        self.associativity
            .max(self.inverse)
            .max(self.dilation_homomorphism)
            .max(self.norm_homogeneity)
            .max(self.gauge_composition)
    }
}

fn gap(a: &HPoint, b: &HPoint) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn group_law_check(dim: Dim, count: usize, seed: u64) -> Result<GroupLawCheck> {
    let a = sample_points(dim, count, 2.0, seed);
    let b = sample_points(dim, count, 2.0, seed.wrapping_add(1));
    let c = sample_points(dim, count, 2.0, seed.wrapping_add(2));
    let mut out = GroupLawCheck {
        associativity: 0.0,
        inverse: 0.0,
        dilation_homomorphism: 0.0,
        norm_homogeneity: 0.0,
        gauge_composition: 0.0,
        points: count,
    };
    let origin = HPoint::origin(dim);
    for i in 0..count {
        let (x, y, z) = (&a[i], &b[i], &c[i]);
        let mu = 0.5 + 0.1 * (i % 20) as f64;
        out.associativity = out
            .associativity
            .max(gap(&compose(&compose(x, y)?, z)?, &compose(x, &compose(y, z)?)?));
        out.inverse = out.inverse.max(gap(&compose(x, &inverse(x))?, &origin));
        out.dilation_homomorphism = out
            .dilation_homomorphism
            .max(gap(&dilate(mu, &compose(x, y)?)?, &compose(&dilate(mu, x)?, &dilate(mu, y)?)?));
        let nx = hnorm(x);
        if nx > 0.0 {
            out.norm_homogeneity = out
                .norm_homogeneity
                .max((hnorm(&dilate(mu, x)?) - mu * nx).abs() / (mu * nx));
        }
        let g1 = Gauge::new(mu, y.clone())?;
        let g2 = Gauge::new(1.0 / (0.3 + mu), z.clone())?;
        let lhs = gauge_apply(&gauge_compose(&g1, &g2)?, x)?;
        let rhs = gauge_apply(&g2, &gauge_apply(&g1, x)?)?;
        out.gauge_composition = out.gauge_composition.max(gap(&lhs, &rhs));
    }
    Ok(out)
}
