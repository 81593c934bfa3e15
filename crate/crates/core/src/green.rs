//! Fundamental solution of `-L` on ℍⁿ, `Γ(ξ) = c_Q |ξ|^{2-Q}`.
//!
//! `c_Q` is calibrated from the bubble equation: since `-LU = U^p`, at every
//! probe `η` we have `U(η) = c_Q ∫ |η⁻¹∘ξ|^{2-Q} U(ξ)^p dξ`, and the ratio of
//! the two sides is evaluated by Monte Carlo.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::bubbles::{eval_u, sample_points, Constants};
use crate::error::{Error, Result};
use crate::group::{compose, hnorm, inverse, Dim, HPoint};
use crate::sampling::{monte_carlo, Estimate, Mixture, RadialLaw, RadialSampler};

/// Closed form `2^{n-4} Γ(n/2)² / π^{n+1}`. Folland's constant is four times
/// larger because his sublaplacian carries a factor 1/4 relative to
/// `L = Σ X_j² + Y_j²` with `X_j = ∂_{x_j} + 2y_j ∂_t`.
pub fn closed_form_constant(dim: Dim) -> f64 {
    let n = dim.n() as f64;
    2f64.powf(n - 4.0) * gamma(n / 2.0).powi(2) / std::f64::consts::PI.powf(n + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenOptions {
    pub probes: usize,
    pub samples_per_probe: usize,
    pub seed: u64,
}

impl Default for GreenOptions {
    fn default() -> Self {
        GreenOptions {
            probes: 10,
            samples_per_probe: 400_000,
            seed: 0x6e_2ee1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreenCalibration {
    pub c_q: f64,
    /// `(max - min)/mean` of the per-probe ratios.
    pub spread: f64,
    pub ratios: Vec<f64>,
    /// Relative standard error of each ratio.
    pub ratio_errors: Vec<f64>,
    pub probes: Vec<HPoint>,
    pub closed_form: f64,
}

/// Importance sampler for integrands with a `|η⁻¹ξ|^{2-Q}` singularity at
/// `η` and bulk concentrated in the unit ball around the origin.
pub fn kernel_sampler(dim: Dim, eta: &HPoint, bulk_scale: f64) -> Result<Mixture> {
    let q = dim.q();
    let reach = bulk_scale + hnorm(eta);
    let near = RadialSampler::new(eta.clone(), RadialLaw::new(2.0, q - 1.0, 0.1 * bulk_scale, reach)?);
    let bulk = RadialSampler::new(
        HPoint::origin(dim),
        RadialLaw::new(q, q - 1.0, 0.3 * bulk_scale, 2.0 * bulk_scale)?,
    );
    Mixture::new(vec![near, bulk], vec![0.5, 0.5])
}

/// `∫ |η⁻¹∘ξ|^{2-Q} g(ξ) dξ` by importance sampling.
pub fn riesz_potential<G>(dim: Dim, eta: &HPoint, bulk_scale: f64, samples: usize, seed: u64, g: G) -> Result<Estimate>
where
    G: Fn(&HPoint) -> f64 + Sync,
{
    let mix = kernel_sampler(dim, eta, bulk_scale)?;
    let power = 2.0 - dim.q();
    let eta_inv = inverse(eta);
    Ok(monte_carlo(samples, seed, |rng| {
        let xi = mix.sample(rng);
        let d = hnorm(&compose(&eta_inv, &xi).expect("same dimension"));
        if d == 0.0 {
            return 0.0;
        }
        d.powf(power) * g(&xi) / mix.density(&xi)
    }))
}

pub fn green_calibrate(k: &Constants, opts: &GreenOptions) -> Result<GreenCalibration> {
    if opts.probes < 2 || opts.samples_per_probe < 1000 {
        return Err(Error::InvalidArgument(
            "green calibration needs at least 2 probes and 1000 samples per probe".into(),
        ));
    }
    let dim = k.dim();
    let p = k.p();
    let probes = sample_points(dim, opts.probes, 1.0, opts.seed);
    let mut ratios = Vec::with_capacity(probes.len());
    let mut ratio_errors = Vec::with_capacity(probes.len());
    for (i, eta) in probes.iter().enumerate() {
        let est = riesz_potential(dim, eta, 1.0, opts.samples_per_probe, opts.seed + 1 + i as u64, |xi| {
            eval_u(k, xi).powf(p)
        })?;
        ratios.push(eval_u(k, eta) / est.value);
        ratio_errors.push(est.relative_error());
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(GreenCalibration {
        c_q: mean,
        spread: (max - min) / mean,
        ratios,
        ratio_errors,
        probes,
        closed_form: closed_form_constant(dim),
    })
}
