//! Interaction integrals between bubbles on the `t`-axis, evaluated by the
//! axisymmetric quadrature in [`crate::quadrature`], plus Monte Carlo kernel
//! integrals and log–log slope fits.

mod kernel;
mod scaling;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

use crate::bubbles::{AxisBubble, BubbleConfig, Constants};
use crate::error::{Error, Result};
use crate::fields::axis_bubbles;
use crate::group::Dim;
use crate::quadrature::{AxisQuadrature, Core, QuadResult, QuadratureOptions};

pub use kernel::{
    kernel_double_integral, kernel_double_norm, pair_sampler, KernelNorm, KernelOptions,
};
pub use scaling::{fit_slope, fit_slope_with_log, ScalingCheck, ScalingPoint, ScalingReport, SlopeFit};

/// Critical exponent `2*_Q = 2Q/(Q-2) = p + 1`.
pub fn critical_exponent(dim: Dim) -> f64 {
    dim.p() + 1.0
}

fn cores_of(bubbles: &[AxisBubble]) -> Vec<Core> {
    bubbles.iter().map(|b| Core::new(b.t0, b.lambda)).collect()
}

fn quadrature(dim: Dim, bubbles: &[AxisBubble], opts: &QuadratureOptions) -> Result<AxisQuadrature> {
    AxisQuadrature::new(dim, cores_of(bubbles), opts.clone())
}

/// `∫ U^{p+1}` in closed form:
/// `c₀^{p+1} ω_{2n-1} · ½B(n, n+1) · √π Γ(n+½)/Γ(n+1)`.
pub fn bubble_mass(k: &Constants) -> f64 {
    let dim = k.dim();
    let n = dim.n() as f64;
    k.c0().powf(k.p() + 1.0)
        * dim.sphere_area()
        * 0.5
        * beta(n, n + 1.0)
        * std::f64::consts::PI.sqrt()
        * gamma(n + 0.5)
        / gamma(n + 1.0)
}

/// `∫ U^α` for `α > Q/(Q-2)`, where it converges.
pub fn bubble_power_integral(k: &Constants, alpha: f64, opts: &QuadratureOptions) -> Result<QuadResult> {
    let dim = k.dim();
    if !(alpha * (dim.q() - 2.0) > dim.q()) {
        return Err(Error::InvalidArgument(format!(
            "∫U^α diverges for α = {alpha} (needs α > Q/(Q-2))"
        )));
    }
    let u = AxisBubble::new(1.0, 0.0);
    quadrature(dim, &[u], opts)?.integrate(|r, t| u.u(k, r, t).powf(alpha))
}

/// Values of `∫ U^α (𝔤U)^β` with `𝔤 = 𝔤_{λ,(0,t₀)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairIntegral {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub t0: f64,
    /// Interaction parameter of the two bubbles.
    pub eps: f64,
    pub value: f64,
    pub error: f64,
}

fn check_pair_exponents(dim: Dim, alpha: f64, beta: f64) -> Result<()> {
    let crit = critical_exponent(dim);
    if !(alpha > 0.0 && beta > 0.0) || (alpha + beta - crit).abs() > 1e-12 * crit {
        return Err(Error::InvalidArgument(format!(
            "exponents must be positive with α + β = {crit}, got α = {alpha}, β = {beta}"
        )));
    }
    Ok(())
}

pub fn pair_integral(
    k: &Constants,
    alpha: f64,
    beta: f64,
    lambda: f64,
    t0: f64,
    opts: &QuadratureOptions,
) -> Result<PairIntegral> {
    let dim = k.dim();
    check_pair_exponents(dim, alpha, beta)?;
    if !(lambda > 0.0 && lambda.is_finite() && t0.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid gauge λ = {lambda}, t₀ = {t0}")));
    }
    let u = AxisBubble::new(1.0, 0.0);
    let v = AxisBubble::new(lambda, t0);
    let eps = crate::bubbles::eps_pair(&u.gauge(dim)?, &v.gauge(dim)?)?;
    let res = quadrature(dim, &[u, v], opts)?
        .integrate(|r, t| u.u(k, r, t).powf(alpha) * v.u(k, r, t).powf(beta))?;
    Ok(PairIntegral {
        alpha,
        beta,
        lambda,
        t0,
        eps,
        value: res.value,
        error: res.error,
    })
}

/// Quadrature value of `∫ U^α (𝔤U)^β` next to its leading asymptotic term
/// `∫U^α · (𝔤U)(0)^β = c₀^{p+1} c_α λ^{nβ} / (1 + λ⁴t₀²)^{nβ/2}`, where
/// `c_α = ∫ (U/c₀)^α`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadingTerm {
    pub computed: f64,
    pub predicted: f64,
    pub c_alpha: f64,
    pub eps: f64,
}

impl LeadingTerm {
    pub fn ratio(&self) -> f64 {
        self.computed / self.predicted
    }
}

pub fn pair_leading_constant(
    k: &Constants,
    alpha: f64,
    beta: f64,
    lambda: f64,
    t0: f64,
    opts: &QuadratureOptions,
) -> Result<LeadingTerm> {
    if !(alpha > beta) {
        return Err(Error::InvalidArgument(format!(
            "the leading term needs α > β, got α = {alpha}, β = {beta}"
        )));
    }
    let pair = pair_integral(k, alpha, beta, lambda, t0, opts)?;
    let c_alpha = bubble_power_integral(k, alpha, opts)?.value / k.c0().powf(alpha);
    let n = k.weight();
    let bracket = 1.0 + lambda.powi(4) * t0 * t0;
    let predicted =
        k.c0().powf(k.p() + 1.0) * c_alpha * lambda.powf(n * beta) / bracket.powf(n * beta / 2.0);
    Ok(LeadingTerm {
        computed: pair.value,
        predicted,
        c_alpha,
        eps: pair.eps,
    })
}

/// Limit `-(Q-2)²/(2(Q+2))` of [`zmode_ratio`] as the bubbles separate.
pub fn zmode_limit(dim: Dim) -> f64 {
    let q = dim.q();
    -(q - 2.0).powi(2) / (2.0 * (q + 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZmodeRatio {
    /// `∫ U_j^{p-1} U_i Z_j^{2n+2}`.
    pub numerator: f64,
    /// `∫ U_j^p U_i`.
    pub denominator: f64,
    pub ratio: f64,
    pub limit: f64,
    pub eps: f64,
    pub error: f64,
}

/// Ratio of the dilation-mode pairing to the plain pairing for
/// `U_j = U` and `U_i = 𝔤_{λ,(0,t)}U` with `λ = λ_i/λ_j ≤ 1`.
pub fn zmode_ratio(k: &Constants, lambda_ratio: f64, t_sep: f64, opts: &QuadratureOptions) -> Result<ZmodeRatio> {
    if !(lambda_ratio > 0.0 && lambda_ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "scale ratio λ_i/λ_j must lie in (0, 1], got {lambda_ratio}"
        )));
    }
    let dim = k.dim();
    let p = k.p();
    let uj = AxisBubble::new(1.0, 0.0);
    let ui = AxisBubble::new(lambda_ratio, t_sep);
    let eps = crate::bubbles::eps_pair(&uj.gauge(dim)?, &ui.gauge(dim)?)?;
    let quad = quadrature(dim, &[uj, ui], opts)?;
    let num = quad.integrate(|r, t| uj.u(k, r, t).powf(p - 1.0) * ui.u(k, r, t) * uj.z_dil(k, r, t))?;
    let den = quad.integrate(|r, t| uj.u(k, r, t).powf(p) * ui.u(k, r, t))?;
    let ratio = num.value / den.value;
    Ok(ZmodeRatio {
        numerator: num.value,
        denominator: den.value,
        ratio,
        limit: zmode_limit(dim),
        eps,
        error: ratio.abs() * (num.relative_error() + den.relative_error()),
    })
}

/// `∫ TU · U^{p-1} / ∫ U^p`, which integrating `T(U^p)` by parts gives as
/// `-Q/p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerRatio {
    pub ratio: f64,
    pub predicted: f64,
    pub error: f64,
}

pub fn euler_ratio(k: &Constants, opts: &QuadratureOptions) -> Result<EulerRatio> {
    let dim = k.dim();
    let p = k.p();
    let n = k.weight();
    let u = AxisBubble::new(1.0, 0.0);
    let quad = quadrature(dim, &[u], opts)?;
    let num = quad.integrate(|r, t| {
        let uv = u.u(k, r, t);
        (u.z_dil(k, r, t) - n * uv) * uv.powf(p - 1.0)
    })?;
    let den = quad.integrate(|r, t| u.u(k, r, t).powf(p))?;
    let ratio = num.value / den.value;
    Ok(EulerRatio {
        ratio,
        predicted: -dim.q() / p,
        error: ratio.abs() * (num.relative_error() + den.relative_error()),
    })
}

fn config_bubbles(cfg: &BubbleConfig) -> Result<Vec<AxisBubble>> {
    if cfg.is_empty() {
        return Err(Error::InvalidArgument("configuration has no bubbles".into()));
    }
    axis_bubbles(cfg)
}

/// `∫ |f|^{2Q/(Q+2)}` with `f = σ^p - Σ U_i^p`.
pub fn f_lp_norm(k: &Constants, cfg: &BubbleConfig, opts: &QuadratureOptions) -> Result<QuadResult> {
    let bs = config_bubbles(cfg)?;
    let p = k.p();
    let exponent = (p + 1.0) / p;
    if bs.len() < 2 {
        return Ok(QuadResult::default());
    }
    quadrature(k.dim(), &bs, opts)?.integrate(|r, t| {
        let vals: smallvec::SmallVec<[f64; 4]> = bs.iter().map(|b| b.u(k, r, t)).collect();
        crate::bubbles::interaction_term(p, &vals).abs().powf(exponent)
    })
}

/// Residual of `∫ f Z_k^{2n+2} ≈ p Σ_{i≠k} ∫ U_k^{p-1} U_i Z_k^{2n+2}` for
/// each bubble `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCheck {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub eps: f64,
    /// `max_k |lhs_k - rhs_k| / ε^{(Q-2)/2}`.
    pub normalized_residual: f64,
    /// `max_k |lhs_k - rhs_k| / max_k |rhs_k|`.
    pub relative_residual: f64,
}

pub fn expansion_check(k: &Constants, cfg: &BubbleConfig, opts: &QuadratureOptions) -> Result<ExpansionCheck> {
    let bs = config_bubbles(cfg)?;
    let p = k.p();
    let eps = cfg.eps();
    if bs.len() < 2 {
        return Ok(ExpansionCheck {
            lhs: vec![0.0],
            rhs: vec![0.0],
            eps,
            normalized_residual: 0.0,
            relative_residual: 0.0,
        });
    }
    let quad = quadrature(k.dim(), &bs, opts)?;
    let mut lhs = Vec::with_capacity(bs.len());
    let mut rhs = Vec::with_capacity(bs.len());
    for (kk, bk) in bs.iter().enumerate() {
        let l = quad.integrate(|r, t| {
            let vals: smallvec::SmallVec<[f64; 4]> = bs.iter().map(|b| b.u(k, r, t)).collect();
            crate::bubbles::interaction_term(p, &vals) * bk.z_dil(k, r, t)
        })?;
        let rr = quad.integrate(|r, t| {
            let uk = bk.u(k, r, t);
            let others: f64 = bs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != kk)
                .map(|(_, b)| b.u(k, r, t))
                .sum();
            p * uk.powf(p - 1.0) * others * bk.z_dil(k, r, t)
        })?;
        lhs.push(l.value);
        rhs.push(rr.value);
    }
    let scale = eps.powf(k.weight());
    let normalized_residual = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max);
    let rhs_max = rhs.iter().fold(0.0, |a: f64, b| a.max(b.abs()));
    let relative_residual = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / rhs_max;
    Ok(ExpansionCheck {
        lhs,
        rhs,
        eps,
        normalized_residual,
        relative_residual,
    })
}

/// `C^∞` step equal to 1 on `[0, 1]` and 0 on `[2, ∞)`.
pub fn smooth_step(s: f64) -> f64 {
    let psi = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let (a, b) = (psi(2.0 - s), psi(s - 1.0));
    a / (a + b)
}

fn smooth_step_derivative(s: f64) -> f64 {
    if s <= 1.0 || s >= 2.0 {
        return 0.0;
    }
    // χ = a/(a+b) with a = ψ(2-s), b = ψ(s-1), ψ'(x) = ψ(x)/x².
    let (x, y) = (2.0 - s, s - 1.0);
    let a = (-1.0 / x).exp();
    let b = (-1.0 / y).exp();
    let da = -a / (x * x);
    let db = b / (y * y);
    (da * b - a * db) / ((a + b) * (a + b))
}

/// Lower bound `∫ f η / ‖η‖_{𝒟¹} ≤ ‖f‖_{𝒟⁻¹}` with the cutoff
/// `η = χ(|ξ| / R)`, `R = 1/(4√ε)`, centred at the first bubble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingBound {
    pub pairing: f64,
    pub eta_norm: f64,
    pub bound: f64,
    pub radius: f64,
    pub eps: f64,
}

pub fn pairing_lower_bound(k: &Constants, cfg: &BubbleConfig, opts: &QuadratureOptions) -> Result<PairingBound> {
    let bs = config_bubbles(cfg)?;
    if bs.len() < 2 {
        return Err(Error::InvalidArgument("pairing bound needs at least two bubbles".into()));
    }
    let eps = cfg.eps();
    let radius = 1.0 / (4.0 * eps.sqrt());
    let centre = bs[0].t0;
    let p = k.p();
    let gauge_norm = move |r: f64, t: f64| (r.powi(4) + (t - centre).powi(2)).sqrt().sqrt();

    let mut cores = cores_of(&bs);
    cores.push(Core::new(centre, 1.0 / radius));
    let quad = AxisQuadrature::new(k.dim(), cores, opts.clone())?;
    let pairing = quad.integrate(|r, t| {
        let eta = smooth_step(gauge_norm(r, t) / radius);
        if eta == 0.0 {
            return 0.0;
        }
        let vals: smallvec::SmallVec<[f64; 4]> = bs.iter().map(|b| b.u(k, r, t)).collect();
        crate::bubbles::interaction_term(p, &vals) * eta
    })?;
    // |Xη|² = χ'(N/R)² |z|² / (R² N²) for η a function of N = |ξ|.
    let eta_quad = AxisQuadrature::new(k.dim(), vec![Core::new(centre, 1.0 / radius)], opts.clone())?;
    let energy = eta_quad.integrate(|r, t| {
        let nn = gauge_norm(r, t);
        let d = smooth_step_derivative(nn / radius);
        if d == 0.0 {
            return 0.0;
        }
        d * d * r * r / (radius * radius * nn * nn)
    })?;
    let eta_norm = energy.value.sqrt();
    Ok(PairingBound {
        pairing: pairing.value,
        eta_norm,
        bound: pairing.value / eta_norm,
        radius,
        eps,
    })
}
