//! Arithmetic of the Heisenberg group ℍⁿ = ℂⁿ × ℝ.
//!
//! Points are stored as flat real arrays `(x_1..x_n, y_1..y_n, t)`. The group
//! law is fixed once, here, as
//!
//! ```text
//! a ∘ b = (z_a + z_b, t_a + t_b + 2 Im(z_a · conj(z_b)))
//! ```
//!
//! and every other operation (inverse, metric, gauge action) is derived from
//! it. Flipping the sign of the twist anywhere else would break the gauge
//! composition law checked in the tests.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Complex dimension `n` of ℍⁿ and the exponents derived from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dim {
    n: usize,
}

impl Dim {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension n must be positive".into()));
        }
        Ok(Dim { n })
    }

    pub fn n(self) -> usize {
        self.n
    }

    /// Homogeneous dimension `Q = 2n + 2`.
    pub fn q(self) -> f64 {
        (2 * self.n + 2) as f64
    }

    /// Critical exponent `p = (Q+2)/(Q-2)`.
    pub fn p(self) -> f64 {
        (self.q() + 2.0) / (self.q() - 2.0)
    }

    /// Sobolev exponent `2Q/(Q-2) = p + 1`.
    pub fn sobolev_exponent(self) -> f64 {
        2.0 * self.q() / (self.q() - 2.0)
    }

    /// Number of real coordinates, `2n + 1`.
    pub fn coords(self) -> usize {
        2 * self.n + 1
    }

    /// Number of bubble modes per gauge, `2n + 2`.
    pub fn modes(self) -> usize {
        2 * self.n + 2
    }

    /// Surface measure of the unit sphere in ℝ^{2n}.
    pub fn sphere_area(self) -> f64 {
        let n = self.n as i32;
        let factorial: f64 = (1..self.n).map(|k| k as f64).product();
        2.0 * std::f64::consts::PI.powi(n) / factorial
    }
}

pub(crate) type Coords = SmallVec<[f64; 7]>;

/// A point `(z, t)` of ℍⁿ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    coords: Coords,
}

impl HPoint {
    pub fn origin(dim: Dim) -> Self {
        HPoint {
            coords: smallvec::smallvec![0.0; dim.coords()],
        }
    }

    pub fn new(x: &[f64], y: &[f64], t: f64) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "x and y must have the same positive length (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        let mut coords: Coords = x.iter().chain(y.iter()).copied().collect();
        coords.push(t);
        let p = HPoint { coords };
        if p.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("coordinates must be finite".into()));
        }
        Ok(p)
    }

    /// Build from a flat `(x, y, t)` slice of length `2n + 1`.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() < 3 || flat.len() % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "flat coordinates must have odd length >= 3, got {}",
                flat.len()
            )));
        }
        let n = flat.len() / 2;
        HPoint::new(&flat[..n], &flat[n..2 * n], flat[2 * n])
    }

    /// The point `(0, t)` on the centre axis.
    pub fn on_axis(dim: Dim, t: f64) -> Self {
        let mut p = HPoint::origin(dim);
        p.coords[2 * dim.n()] = t;
        p
    }

    pub fn dim(&self) -> Dim {
        Dim {
            n: self.coords.len() / 2,
        }
    }

    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn x(&self) -> &[f64] {
        &self.coords[..self.n()]
    }

    pub fn y(&self) -> &[f64] {
        let n = self.n();
        &self.coords[n..2 * n]
    }

    pub fn t(&self) -> f64 {
        self.coords[2 * self.n()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    /// `|z|²`.
    pub fn z_norm2(&self) -> f64 {
        self.coords[..2 * self.n()].iter().map(|c| c * c).sum()
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }

    fn check_same_dim(&self, other: &HPoint) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            });
        }
        Ok(())
    }
}

/// `Im(z_a · conj(z_b))` summed over the complex coordinates.
fn twist(a: &HPoint, b: &HPoint) -> f64 {
    let n = a.n();
    (0..n)
        .map(|j| a.y()[j] * b.x()[j] - a.x()[j] * b.y()[j])
        .sum()
}

/// Group law `a ∘ b`.
pub fn compose(a: &HPoint, b: &HPoint) -> Result<HPoint> {
    a.check_same_dim(b)?;
    let n = a.n();
    let mut coords: Coords = a
        .coords
        .iter()
        .zip(b.coords.iter())
        .map(|(p, q)| p + q)
        .collect();
    coords[2 * n] += 2.0 * twist(a, b);
    Ok(HPoint { coords })
}

pub fn inverse(a: &HPoint) -> HPoint {
    HPoint {
        coords: a.coords.iter().map(|c| -c).collect(),
    }
}

/// Anisotropic dilation `δ_μ(z, t) = (μz, μ²t)`.
pub fn dilate(mu: f64, a: &HPoint) -> Result<HPoint> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dilation factor must be positive, got {mu}"
        )));
    }
    Ok(dilate_unchecked(mu, a))
}

pub(crate) fn dilate_unchecked(mu: f64, a: &HPoint) -> HPoint {
    let n = a.n();
    let mut coords = a.coords.clone();
    for c in coords[..2 * n].iter_mut() {
        *c *= mu;
    }
    coords[2 * n] *= mu * mu;
    HPoint { coords }
}

/// Homogeneous (Korányi) norm `(|z|⁴ + t²)^{1/4}`.
pub fn hnorm(a: &HPoint) -> f64 {
    let z2 = a.z_norm2();
    let t = a.t();
    (z2 * z2 + t * t).sqrt().sqrt()
}

/// Left-invariant distance `d(a, b) = |b⁻¹ ∘ a|`.
pub fn dist(a: &HPoint, b: &HPoint) -> Result<f64> {
    Ok(hnorm(&compose(&inverse(b), a)?))
}

/// Scaling/translation pair `(λ, ξ)` labelling the bubble `𝔤_{λ,ξ}U`.
///
/// As an operator on functions, `(𝔤_{λ,ξ} u)(a) = λ^{(Q-2)/2} u(δ_λ(ξ⁻¹ ∘ a))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gauge {
    lambda: f64,
    xi: HPoint,
}

impl Gauge {
    pub fn new(lambda: f64, xi: HPoint) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gauge scale must be positive, got {lambda}"
            )));
        }
        Ok(Gauge { lambda, xi })
    }

    pub fn identity(dim: Dim) -> Self {
        Gauge {
            lambda: 1.0,
            xi: HPoint::origin(dim),
        }
    }

    /// Gauge centred on the axis point `(0, t)`.
    pub fn on_axis(dim: Dim, lambda: f64, t: f64) -> Result<Self> {
        Gauge::new(lambda, HPoint::on_axis(dim, t))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn xi(&self) -> &HPoint {
        &self.xi
    }

    pub fn dim(&self) -> Dim {
        self.xi.dim()
    }

    /// Whether the translation lies on the `t`-axis (`z = 0`).
    pub fn is_axial(&self) -> bool {
        self.xi.z_norm2() == 0.0
    }
}

/// Operator product `g1 g2`: applying the result to a function equals applying
/// `g2` first and then `g1`. On points this reads
/// `gauge_apply(g1 g2, a) = gauge_apply(g2, gauge_apply(g1, a))`.
pub fn gauge_compose(g1: &Gauge, g2: &Gauge) -> Result<Gauge> {
    let shift = dilate_unchecked(1.0 / g1.lambda, &g2.xi);
    Gauge::new(g1.lambda * g2.lambda, compose(&g1.xi, &shift)?)
}

/// `𝔤_{λ,ξ}⁻¹ = 𝔤_{1/λ, δ_λ(ξ⁻¹)}`.
pub fn gauge_inverse(g: &Gauge) -> Gauge {
    Gauge {
        lambda: 1.0 / g.lambda,
        xi: dilate_unchecked(g.lambda, &inverse(&g.xi)),
    }
}

/// Inner point map of the gauge action, `a ↦ δ_λ(ξ⁻¹ ∘ a)`.
pub fn gauge_apply(g: &Gauge, a: &HPoint) -> Result<HPoint> {
    Ok(dilate_unchecked(g.lambda, &compose(&inverse(&g.xi), a)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn d1() -> Dim {
        Dim::new(1).unwrap()
    }

    fn pt(flat: &[f64]) -> HPoint {
        HPoint::from_flat(flat).unwrap()
    }

    fn close(a: &HPoint, b: &HPoint, tol: f64) -> bool {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .all(|(p, q)| (p - q).abs() <= tol * (1.0 + p.abs().max(q.abs())))
    }

    fn arb_point(n: usize) -> impl Strategy<Value = HPoint> {
        proptest::collection::vec(-3.0f64..3.0, 2 * n + 1).prop_map(|v| pt(&v))
    }

    fn arb_gauge(n: usize) -> impl Strategy<Value = Gauge> {
        (0.2f64..5.0, arb_point(n)).prop_map(|(l, xi)| Gauge::new(l, xi).unwrap())
    }

    #[test]
    fn dimension_exponents() {
        for n in 1..6 {
            let d = Dim::new(n).unwrap();
            assert_eq!(d.q(), (2 * n + 2) as f64);
            assert_relative_eq!(d.p() * (d.q() - 2.0), d.q() + 2.0, epsilon = 1e-12);
            assert_relative_eq!(d.sobolev_exponent(), d.p() + 1.0, epsilon = 1e-12);
        }
        assert!(Dim::new(0).is_err());
        assert_relative_eq!(d1().sphere_area(), 2.0 * std::f64::consts::PI);
        assert_relative_eq!(
            Dim::new(2).unwrap().sphere_area(),
            2.0 * std::f64::consts::PI.powi(2)
        );
    }

    #[test]
    fn compose_examples() {
        let p = pt(&[0.3, -1.2, 4.0]);
        assert_eq!(compose(&HPoint::origin(d1()), &p).unwrap(), p);
        let a = pt(&[0.0, 1.0, 0.0]);
        let b = pt(&[1.0, 0.0, 0.0]);
        assert_eq!(compose(&a, &b).unwrap(), pt(&[1.0, 1.0, 2.0]));
        let q = HPoint::origin(Dim::new(2).unwrap());
        assert!(matches!(
            compose(&p, &q),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inverse_and_dilate_examples() {
        assert_eq!(inverse(&HPoint::origin(d1())), HPoint::origin(d1()));
        assert_eq!(inverse(&pt(&[1.0, 0.0, 5.0])), pt(&[-1.0, 0.0, -5.0]));
        let a = pt(&[1.0, 0.0, 3.0]);
        assert_eq!(dilate(1.0, &a).unwrap(), a);
        assert_eq!(dilate(2.0, &a).unwrap(), pt(&[2.0, 0.0, 12.0]));
        assert!(dilate(0.0, &a).is_err());
        assert!(dilate(-1.0, &a).is_err());
    }

    #[test]
    fn norm_and_distance_examples() {
        // (16²)^{1/4} = 4; the point at t = 4 has norm 2.
        assert_relative_eq!(hnorm(&pt(&[0.0, 0.0, 16.0])), 4.0);
        assert_relative_eq!(hnorm(&pt(&[0.0, 0.0, 4.0])), 2.0);
        assert_relative_eq!(hnorm(&pt(&[1.0, 0.0, 0.0])), 1.0);
        let a = pt(&[0.4, 0.1, -2.0]);
        assert_eq!(dist(&a, &a).unwrap(), 0.0);
        assert_relative_eq!(
            dist(&HPoint::origin(d1()), &pt(&[0.0, 0.0, 1.0])).unwrap(),
            1.0
        );
        assert_eq!(hnorm(&HPoint::origin(d1())), 0.0);
    }

    #[test]
    fn gauge_examples() {
        let g2 = Gauge::on_axis(d1(), 2.0, 0.0).unwrap();
        let g3 = Gauge::on_axis(d1(), 3.0, 0.0).unwrap();
        let g6 = gauge_compose(&g2, &g3).unwrap();
        assert_relative_eq!(g6.lambda(), 6.0);
        assert!(g6.xi().is_origin());

        let a = pt(&[1.0, 0.0, 1.0]);
        assert_eq!(gauge_apply(&g2, &a).unwrap(), pt(&[2.0, 0.0, 4.0]));
        assert_eq!(gauge_apply(&Gauge::identity(d1()), &a).unwrap(), a);
        assert!(Gauge::new(0.0, HPoint::origin(d1())).is_err());
    }

    /// Brute-force check of `𝔤_i⁻¹𝔤_j = 𝔤_{λ_j/λ_i, δ_{λ_i}(ξ_i⁻¹∘ξ_j)}` through the
    /// point action on sample points.
    #[test]
    fn relative_gauge_formula_matches_point_action() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..=3 {
            let dim = Dim::new(n).unwrap();
            let rand_pt = |rng: &mut rand_chacha::ChaCha8Rng| {
                let v: Vec<f64> = (0..dim.coords()).map(|_| rng.random_range(-2.0..2.0)).collect();
                pt(&v)
            };
            for _ in 0..20 {
                let gi = Gauge::new(rng.random_range(0.3..3.0), rand_pt(&mut rng)).unwrap();
                let gj = Gauge::new(rng.random_range(0.3..3.0), rand_pt(&mut rng)).unwrap();
                let composed = gauge_compose(&gauge_inverse(&gi), &gj).unwrap();
                let rel_xi = dilate(gi.lambda(), &compose(&inverse(gi.xi()), gj.xi()).unwrap()).unwrap();
                let formula = Gauge::new(gj.lambda() / gi.lambda(), rel_xi).unwrap();
                assert_relative_eq!(composed.lambda(), formula.lambda(), max_relative = 1e-14);
                for _ in 0..50 {
                    let a = rand_pt(&mut rng);
                    let lhs = gauge_apply(&composed, &a).unwrap();
                    let rhs = gauge_apply(&formula, &a).unwrap();
                    // Operator product: apply gauge_inverse(gi) first, then gj.
                    let chained =
                        gauge_apply(&gj, &gauge_apply(&gauge_inverse(&gi), &a).unwrap()).unwrap();
                    assert!(close(&lhs, &rhs, 1e-12), "{lhs:?} vs {rhs:?}");
                    assert!(close(&lhs, &chained, 1e-12));
                }
            }
        }
    }

    /// Volume of a left-translated box equals the box volume (Haar measure).
    #[test]
    fn left_translation_preserves_volume() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        // B = [0,1] x [0,1] x [0,1], c = (0.7, -0.4, 0.3).
        let c = pt(&[0.7, -0.4, 0.3]);
        let c_inv = inverse(&c);
        // c∘B lies inside x∈[0.7,1.7], y∈[-0.4,0.6], t∈[0.3 - 4, 1.3 + 4].
        let (lo, hi) = ([0.7, -0.4, -3.7], [1.7, 0.6, 5.3]);
        let bounding: f64 = (0..3).map(|k| hi[k] - lo[k]).product();
        let samples = 400_000;
        let mut hits = 0usize;
        for _ in 0..samples {
            let v: Vec<f64> = (0..3).map(|k| rng.random_range(lo[k]..hi[k])).collect();
            let back = compose(&c_inv, &pt(&v)).unwrap();
            if back.as_slice().iter().all(|&s| (0.0..=1.0).contains(&s)) {
                hits += 1;
            }
        }
        let volume = bounding * hits as f64 / samples as f64;
        assert!((volume - 1.0).abs() < 0.01, "volume {volume}");
    }

    proptest! {
        #[test]
        fn associativity(a in arb_point(2), b in arb_point(2), c in arb_point(2)) {
            let lhs = compose(&compose(&a, &b).unwrap(), &c).unwrap();
            let rhs = compose(&a, &compose(&b, &c).unwrap()).unwrap();
            prop_assert!(close(&lhs, &rhs, 1e-12));
        }

        #[test]
        fn inverse_axioms(a in arb_point(3), b in arb_point(3)) {
            let e = compose(&a, &inverse(&a)).unwrap();
            prop_assert!(close(&e, &HPoint::origin(a.dim()), 1e-12));
            let back = compose(&inverse(&a), &compose(&a, &b).unwrap()).unwrap();
            prop_assert!(close(&back, &b, 1e-12));
        }

        #[test]
        fn dilation_is_automorphism(mu in 0.1f64..10.0, a in arb_point(1), b in arb_point(1)) {
            let lhs = dilate(mu, &compose(&a, &b).unwrap()).unwrap();
            let rhs = compose(&dilate(mu, &a).unwrap(), &dilate(mu, &b).unwrap()).unwrap();
            prop_assert!(close(&lhs, &rhs, 1e-12));
        }

        #[test]
        fn norm_homogeneity(mu in 0.1f64..10.0, a in arb_point(2)) {
            let na = hnorm(&a);
            prop_assume!(na > 1e-6);
            let ratio = hnorm(&dilate(mu, &a).unwrap()) / na;
            prop_assert!((ratio / mu - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn distance_left_invariant(a in arb_point(2), b in arb_point(2), c in arb_point(2)) {
            let d0 = dist(&a, &b).unwrap();
            let d1 = dist(&compose(&c, &a).unwrap(), &compose(&c, &b).unwrap()).unwrap();
            prop_assert!((d0 - d1).abs() <= 1e-12 * (1.0 + d0));
        }

        #[test]
        fn gauge_group_axioms(g1 in arb_gauge(1), g2 in arb_gauge(1), g3 in arb_gauge(1), a in arb_point(1)) {
            let id = gauge_compose(&g1, &gauge_inverse(&g1)).unwrap();
            prop_assert!((id.lambda() - 1.0).abs() < 1e-12);
            prop_assert!(close(id.xi(), &HPoint::origin(g1.dim()), 1e-12));
            let id2 = gauge_compose(&gauge_inverse(&g1), &g1).unwrap();
            prop_assert!(close(id2.xi(), &HPoint::origin(g1.dim()), 1e-12));

            let left = gauge_compose(&gauge_compose(&g1, &g2).unwrap(), &g3).unwrap();
            let right = gauge_compose(&g1, &gauge_compose(&g2, &g3).unwrap()).unwrap();
            prop_assert!((left.lambda() / right.lambda() - 1.0).abs() < 1e-12);
            prop_assert!(close(left.xi(), right.xi(), 1e-11));

            let via_product = gauge_apply(&gauge_compose(&g1, &g2).unwrap(), &a).unwrap();
            let chained = gauge_apply(&g2, &gauge_apply(&g1, &a).unwrap()).unwrap();
            prop_assert!(close(&via_product, &chained, 1e-11));
        }
    }
}
