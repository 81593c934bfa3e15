//! High-order finite differences along the left-invariant horizontal fields.
//!
//! The flow of `X_j` through `a` is the curve `s ↦ a ∘ (s e_j)`, so these
//! routines differentiate along right translations. They are the reference
//! instrument for every analytic derivative formula in the crate.

use crate::group::{compose, HPoint};

const D1: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const D2_CENTER: f64 = -205.0 / 72.0;
const D2: [f64; 4] = [8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];

/// Eighth-order central first derivative of a scalar curve at `0`.
pub fn central_first(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    let mut acc = 0.0;
    for (k, c) in D1.iter().enumerate() {
        let s = (k + 1) as f64 * h;
        acc += c * (g(s) - g(-s));
    }
    acc / h
}

/// Eighth-order central second derivative of a scalar curve at `0`.
pub fn central_second(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    let mut acc = D2_CENTER * g(0.0);
    for (k, c) in D2.iter().enumerate() {
        let s = (k + 1) as f64 * h;
        acc += c * (g(s) + g(-s));
    }
    acc / (h * h)
}

/// Point `a ∘ (s e_j)`, the time-`s` flow of `X_j` (`j < n`) or `X_{j}` for
/// the `y`-directions (`n <= j < 2n`).
pub fn flow(a: &HPoint, j: usize, s: f64) -> HPoint {
    let mut e = HPoint::origin(a.dim());
    e.as_mut_slice()[j] = s;
    compose(a, &e).expect("same dimension by construction")
}

/// Default step for points at homogeneous scale `scale`.
pub fn default_step(scale: f64) -> f64 {
    0.02 * (1.0 + scale)
}

/// Horizontal gradient `(X_1 u, …, X_{2n} u)` by finite differences.
pub fn horizontal_gradient(u: impl Fn(&HPoint) -> f64, a: &HPoint, h: f64) -> Vec<f64> {
    (0..2 * a.n())
        .map(|j| central_first(|s| u(&flow(a, j, s)), h))
        .collect()
}

/// Sub-Laplacian `Σ X_j² u` by finite differences.
pub fn sublaplacian(u: impl Fn(&HPoint) -> f64, a: &HPoint, h: f64) -> f64 {
    (0..2 * a.n())
        .map(|j| central_second(|s| u(&flow(a, j, s)), h))
        .sum()
}

/// Derivative along the dilation field `T`, whose flow is `s ↦ δ_{e^s} a`.
pub fn dilation_derivative(u: impl Fn(&HPoint) -> f64, a: &HPoint, h: f64) -> f64 {
    central_first(
        |s| u(&crate::group::dilate_unchecked(s.exp(), a)),
        h,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_on_polynomials() {
        let cubic = |s: f64| 1.0 + 2.0 * s - 3.0 * s * s + 0.5 * s * s * s;
        assert_relative_eq!(central_first(cubic, 0.1), 2.0, epsilon = 1e-12);
        assert_relative_eq!(central_second(cubic, 0.1), -6.0, epsilon = 1e-10);
        assert_relative_eq!(central_first(f64::sin, 0.05), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn flows_follow_vector_fields() {
        // X_1 = ∂x + 2y∂t, Y_1 = ∂y - 2x∂t on ℍ¹.
        let a = HPoint::from_flat(&[0.3, -0.7, 1.1]).unwrap();
        let t = |p: &HPoint| p.t();
        let g = horizontal_gradient(t, &a, 0.01);
        assert_relative_eq!(g[0], 2.0 * -0.7, epsilon = 1e-12);
        assert_relative_eq!(g[1], -2.0 * 0.3, epsilon = 1e-12);
        // Δ(x² + y²) = 4 on ℍ¹.
        let r2 = |p: &HPoint| p.z_norm2();
        assert_relative_eq!(sublaplacian(r2, &a, 0.01), 4.0, epsilon = 1e-9);
        // T t = 2t.
        assert_relative_eq!(dilation_derivative(t, &a, 0.01), 2.2, epsilon = 1e-9);
    }
}
