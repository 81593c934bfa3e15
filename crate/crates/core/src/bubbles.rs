//! The CR Yamabe bubble `U = c₀ ρ₄^{-(Q-2)/4}`, `ρ₄ = (1+|z|²)² + t²`, its
//! gauge transforms, derivative modes and the pointwise nonlinearities built
//! from sums of bubbles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::derivatives;
use crate::error::{Error, Result};
use crate::group::{gauge_apply, gauge_compose, hnorm, Dim, Gauge, HPoint};

/// Bubble normalisation for a fixed dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    dim: Dim,
    c0: f64,
}

/// Outcome of the finite-difference calibration of `c₀`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub constants: Constants,
    /// Mean of `-Δw / w^p` over the sample.
    pub ratio: f64,
    /// `(max - min) / mean` of the same ratio.
    pub spread: f64,
    pub samples: usize,
}

const CALIBRATION_SEED: u64 = 0x5eed_c0;
const CALIBRATION_SPREAD: f64 = 1e-6;

impl Constants {
    /// Constants with an explicit `c₀`, e.g. a deliberately perturbed value.
    pub fn new(dim: Dim, c0: f64) -> Result<Self> {
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(Error::InvalidArgument(format!("c0 must be positive, got {c0}")));
        }
        Ok(Constants { dim, c0 })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.dim.n()
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn p(&self) -> f64 {
        self.dim.p()
    }

    /// `(Q-2)/2 = n`, the weight of the gauge action on functions.
    pub fn weight(&self) -> f64 {
        self.dim.n() as f64
    }
}

/// `(1+|z|²)² + t²`.
#[inline]
pub fn rho4(z2: f64, t: f64) -> f64 {
    let a = 1.0 + z2;
    a * a + t * t
}

/// Unnormalised profile `ρ₄^{-n/2}` as a function of `|z|²` and `t`.
#[inline]
fn profile(n: usize, z2: f64, t: f64) -> f64 {
    rho4(z2, t).powf(-0.5 * n as f64)
}

/// Random test points with every coordinate in `[-scale, scale]`.
pub fn sample_points(dim: Dim, count: usize, scale: f64, seed: u64) -> Vec<HPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..dim.coords())
                .map(|_| rng.random_range(-scale..scale))
                .collect();
            HPoint::from_flat(&v).expect("finite coordinates")
        })
        .collect()
}

/// Calibrate `c₀` so that `ΔU + U^p = 0`.
///
/// The unnormalised profile `w` satisfies `-Δw = ρ w^p` for a constant `ρ`;
/// the ratio is measured by eighth-order finite differences along the
/// horizontal flows at 200 points and must be constant to `1e-6`. Then
/// `c₀^{p-1} = ρ`.
pub fn calibrate_c0(dim: Dim) -> Result<Constants> {
    calibrate_with_report(dim).map(|c| c.constants)
}

pub fn calibrate_with_report(dim: Dim) -> Result<Calibration> {
    let n = dim.n();
    let p = dim.p();
    let w = |a: &HPoint| profile(n, a.z_norm2(), a.t());
    let points = sample_points(dim, 200, 1.5, CALIBRATION_SEED);
    let ratios: Vec<f64> = points
        .iter()
        .map(|a| {
            let h = derivatives::default_step(hnorm(a));
            -derivatives::sublaplacian(w, a, h) / w(a).powf(p)
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    let spread = (hi - lo) / mean.abs();
    if !(mean > 0.0) || !(spread <= CALIBRATION_SPREAD) {
        return Err(Error::Calibration(format!(
            "-Δw/w^p is not constant: mean {mean:.6e}, relative spread {spread:.3e}"
        )));
    }
    let c0 = mean.powf(1.0 / (p - 1.0));
    Ok(Calibration {
        constants: Constants::new(dim, c0)?,
        ratio: mean,
        spread,
        samples: ratios.len(),
    })
}

fn check_dim(k: &Constants, a: &HPoint) -> Result<()> {
    if a.n() != k.n() {
        return Err(Error::DimensionMismatch {
            expected: k.n(),
            found: a.n(),
        });
    }
    Ok(())
}

/// `U(a) = c₀ ρ₄(a)^{-(Q-2)/4}`.
pub fn eval_u(k: &Constants, a: &HPoint) -> f64 {
    k.c0 * profile(k.n(), a.z_norm2(), a.t())
}

/// `(𝔤U)(a) = λ^{(Q-2)/2} U(δ_λ(ξ⁻¹ ∘ a))`.
pub fn eval_gauge_u(k: &Constants, g: &Gauge, a: &HPoint) -> Result<f64> {
    check_dim(k, a)?;
    let b = gauge_apply(g, a)?;
    Ok(g.lambda().powf(k.weight()) * eval_u(k, &b))
}

/// Expanded closed form of the gauge-transformed bubble,
/// `c₀λ^{n} [(1+λ²|z-z₀|²)² + λ⁴(t - t₀ - 2Im(z̄·z₀))²]^{-n/2}`, written
/// without going through the group law.
pub fn eval_gauge_u_closed_form(k: &Constants, g: &Gauge, a: &HPoint) -> Result<f64> {
    check_dim(k, a)?;
    let n = k.n();
    let l = g.lambda();
    let xi = g.xi();
    let mut dz2 = 0.0;
    let mut im = 0.0;
    for j in 0..n {
        let (x, y) = (a.x()[j], a.y()[j]);
        let (x0, y0) = (xi.x()[j], xi.y()[j]);
        dz2 += (x - x0).powi(2) + (y - y0).powi(2);
        // Im(conj(z) z₀) = x y₀ - y x₀
        im += x * y0 - y * x0;
    }
    let s = 1.0 + l * l * dz2;
    let tt = l * l * (a.t() - xi.t() - 2.0 * im);
    Ok(k.c0 * l.powi(n as i32) * (s * s + tt * tt).powf(-0.5 * n as f64))
}

/// Derivative of `ρ₄(η⁻¹ ∘ a)` with respect to the `a`-th translation
/// parameter (`1 <= a <= 2n+1`) at `η = 0`.
fn translation_derivative(n: usize, index: usize, b: &HPoint) -> f64 {
    let z2 = b.z_norm2();
    let big_a = 1.0 + z2;
    let t = b.t();
    if index <= n {
        let j = index - 1;
        -4.0 * b.x()[j] * big_a + 4.0 * b.y()[j] * t
    } else if index <= 2 * n {
        let j = index - n - 1;
        -4.0 * b.y()[j] * big_a - 4.0 * b.x()[j] * t
    } else {
        -2.0 * t
    }
}

/// `TU = -(Q-2)(|z|²(1+|z|²) + t²)/ρ₄ · U`, the derivative along the
/// dilation field `T = Σ(x_j∂x_j + y_j∂y_j) + 2t∂t`.
pub fn eval_tu(k: &Constants, a: &HPoint) -> f64 {
    let z2 = a.z_norm2();
    let t = a.t();
    let q_minus_2 = 2.0 * k.weight();
    -q_minus_2 * (z2 * (1.0 + z2) + t * t) / rho4(z2, t) * eval_u(k, a)
}

/// Untransported mode `Z^a` at a point, `1 <= a <= 2n+2`.
fn eval_z_untransported(k: &Constants, index: usize, b: &HPoint) -> f64 {
    let n = k.n();
    if index == 2 * n + 2 {
        return k.weight() * eval_u(k, b) + eval_tu(k, b);
    }
    let r4 = rho4(b.z_norm2(), b.t());
    -0.5 * n as f64 * k.c0 * r4.powf(-0.5 * n as f64 - 1.0) * translation_derivative(n, index, b)
}

/// Mode `Z_g^a = 𝔤 Z^a` where `Z^a = ∂_{η_a} 𝔤_{1,η}U` for `a <= 2n+1` and
/// `Z^{2n+2} = ∂_λ 𝔤_{λ,0}U |_{λ=1}`. Indices are 1-based.
pub fn eval_z(k: &Constants, index: usize, g: &Gauge, a: &HPoint) -> Result<f64> {
    check_dim(k, a)?;
    if index == 0 || index > k.dim.modes() {
        return Err(Error::InvalidArgument(format!(
            "mode index must be in 1..={}, got {index}",
            k.dim.modes()
        )));
    }
    let b = gauge_apply(g, a)?;
    Ok(g.lambda().powf(k.weight()) * eval_z_untransported(k, index, &b))
}

/// Horizontal gradient `(X_1, …, X_{2n})(𝔤U)` at `a`.
pub fn eval_xu(k: &Constants, g: &Gauge, a: &HPoint) -> Result<Vec<f64>> {
    check_dim(k, a)?;
    let n = k.n();
    let b = gauge_apply(g, a)?;
    let z2 = b.z_norm2();
    let big_a = 1.0 + z2;
    let t = b.t();
    let r4 = rho4(z2, t);
    let factor = -0.5 * n as f64 * k.c0 * r4.powf(-0.5 * n as f64 - 1.0)
        * g.lambda().powf(k.weight() + 1.0);
    let mut out = Vec::with_capacity(2 * n);
    for j in 0..n {
        out.push(factor * (4.0 * b.x()[j] * big_a + 4.0 * b.y()[j] * t));
    }
    for j in 0..n {
        out.push(factor * (4.0 * b.y()[j] * big_a - 4.0 * b.x()[j] * t));
    }
    Ok(out)
}

/// Interaction parameter
/// `ε_ij = min{λ_i/λ_j, λ_j/λ_i, 1/(λ_iλ_j|ξ_i⁻¹∘ξ_j|²)}`.
pub fn eps_pair(gi: &Gauge, gj: &Gauge) -> Result<f64> {
    let ratio = (gi.lambda() / gj.lambda()).min(gj.lambda() / gi.lambda());
    let d = crate::group::dist(gj.xi(), gi.xi())?;
    let sep = if d == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (gi.lambda() * gj.lambda() * d * d)
    };
    Ok(ratio.min(sep))
}

/// An ordered family of bubbles and their pairwise interaction parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BubbleConfig {
    dim: Dim,
    gauges: Vec<Gauge>,
    eps_matrix: Vec<Vec<f64>>,
    eps: f64,
}

impl BubbleConfig {
    pub fn new(dim: Dim, gauges: Vec<Gauge>) -> Result<Self> {
        if let Some(g) = gauges.iter().find(|g| g.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim.n(),
                found: g.dim().n(),
            });
        }
        let m = gauges.len();
        let mut eps_matrix = vec![vec![0.0; m]; m];
        let mut eps: f64 = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                let e = eps_pair(&gauges[i], &gauges[j])?;
                eps_matrix[i][j] = e;
                eps_matrix[j][i] = e;
                eps = eps.max(e);
            }
        }
        Ok(BubbleConfig {
            dim,
            gauges,
            eps_matrix,
            eps,
        })
    }

    /// Bubbles of equal scale `λ` centred at `(0, t_k)` on the `t`-axis.
    pub fn on_axis(dim: Dim, centers: &[(f64, f64)]) -> Result<Self> {
        let gauges = centers
            .iter()
            .map(|&(lambda, t)| Gauge::on_axis(dim, lambda, t))
            .collect::<Result<Vec<_>>>()?;
        BubbleConfig::new(dim, gauges)
    }

    /// Two unit bubbles at `t = 0` and `t = -1/ε`, so that `ε_12 = ε`.
    pub fn two_bubble(dim: Dim, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        BubbleConfig::on_axis(dim, &[(1.0, 0.0), (1.0, -1.0 / eps)])
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn gauges(&self) -> &[Gauge] {
        &self.gauges
    }

    pub fn len(&self) -> usize {
        self.gauges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gauges.is_empty()
    }

    pub fn eps_matrix(&self) -> &[Vec<f64>] {
        &self.eps_matrix
    }

    /// Largest pairwise interaction (zero for a single bubble).
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn weakly_interacting(&self, delta: f64) -> bool {
        self.eps <= delta
    }

    /// Whether every centre lies on the `t`-axis.
    pub fn is_axial(&self) -> bool {
        self.gauges.iter().all(Gauge::is_axial)
    }

    /// Apply a common gauge `g` to every bubble: `𝔤_i U ↦ g(𝔤_i U)`.
    pub fn transported(&self, g: &Gauge) -> Result<Self> {
        let gauges = self
            .gauges
            .iter()
            .map(|gi| gauge_compose(g, gi))
            .collect::<Result<Vec<_>>>()?;
        BubbleConfig::new(self.dim, gauges)
    }
}

/// `|s|^{p-1}s - σ^p - pσ^{p-1}ρ` with `s = σ + ρ`, written without
/// cancellation for the integer exponents `p = 2, 3`.
pub fn nonlinearity(p: f64, sigma: f64, rho: f64) -> f64 {
    let s = sigma + rho;
    if p == 3.0 {
        return rho * rho * (3.0 * sigma + rho);
    }
    if p == 2.0 && s >= 0.0 {
        return rho * rho;
    }
    s.abs().powf(p - 1.0) * s - sigma.powf(p) - p * sigma.powf(p - 1.0) * rho
}

/// Bubble values `U_i(a)` for every bubble in the configuration.
pub fn eval_bubbles(k: &Constants, cfg: &BubbleConfig, a: &HPoint) -> Result<Vec<f64>> {
    cfg.gauges.iter().map(|g| eval_gauge_u(k, g, a)).collect()
}

/// `σ = Σ U_i`.
pub fn eval_sigma(k: &Constants, cfg: &BubbleConfig, a: &HPoint) -> Result<f64> {
    Ok(eval_bubbles(k, cfg, a)?.iter().sum())
}

/// Interaction term `f = (Σ U_i)^p - Σ U_i^p`.
pub fn eval_f(k: &Constants, cfg: &BubbleConfig, a: &HPoint) -> Result<f64> {
    let values = eval_bubbles(k, cfg, a)?;
    Ok(interaction_term(k.p(), &values))
}

/// `(Σ v_i)^p - Σ v_i^p` for nonnegative `v_i`.
pub fn interaction_term(p: f64, values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let sigma: f64 = values.iter().sum();
    sigma.powf(p) - values.iter().map(|v| v.powf(p)).sum::<f64>()
}

/// `N(ρ) = |σ+ρ|^{p-1}(σ+ρ) - σ^p - pσ^{p-1}ρ` at `a`.
pub fn eval_n(k: &Constants, cfg: &BubbleConfig, rho: f64, a: &HPoint) -> Result<f64> {
    Ok(nonlinearity(k.p(), eval_sigma(k, cfg, a)?, rho))
}

/// Bubble `𝔤_{λ,(0,t₀)}U` restricted to axisymmetric coordinates `(r, t)`,
/// `r = |z|`. The twist term vanishes because the centre has `z₀ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBubble {
    pub lambda: f64,
    pub t0: f64,
}

impl AxisBubble {
    pub fn new(lambda: f64, t0: f64) -> Self {
        AxisBubble { lambda, t0 }
    }

    pub fn from_gauge(g: &Gauge) -> Result<Self> {
        if !g.is_axial() {
            return Err(Error::InvalidArgument(
                "bubble centre is not on the t-axis".into(),
            ));
        }
        Ok(AxisBubble::new(g.lambda(), g.xi().t()))
    }

    pub fn gauge(&self, dim: Dim) -> Result<Gauge> {
        Gauge::on_axis(dim, self.lambda, self.t0)
    }

    /// Coordinates after the inner point map: `(λ²r², λ²(t - t₀))`.
    #[inline]
    fn pulled_back(&self, r: f64, t: f64) -> (f64, f64) {
        let l2 = self.lambda * self.lambda;
        (l2 * r * r, l2 * (t - self.t0))
    }

    pub fn u(&self, k: &Constants, r: f64, t: f64) -> f64 {
        let (z2, s) = self.pulled_back(r, t);
        self.lambda.powf(k.weight()) * k.c0 * profile(k.n(), z2, s)
    }

    /// `t`-translation mode `Z^{2n+1}` of this bubble.
    pub fn z_t(&self, k: &Constants, r: f64, t: f64) -> f64 {
        let n = k.n() as f64;
        let (z2, s) = self.pulled_back(r, t);
        self.lambda.powf(k.weight()) * n * k.c0 * s * rho4(z2, s).powf(-0.5 * n - 1.0)
    }

    /// Dilation mode `Z^{2n+2} = nU + TU` of this bubble.
    pub fn z_dil(&self, k: &Constants, r: f64, t: f64) -> f64 {
        let n = k.n() as f64;
        let (z2, s) = self.pulled_back(r, t);
        let r4 = rho4(z2, s);
        let u = k.c0 * r4.powf(-0.5 * n);
        let tu = -2.0 * n * (z2 * (1.0 + z2) + s * s) / r4 * u;
        self.lambda.powf(k.weight()) * (n * u + tu)
    }
}
