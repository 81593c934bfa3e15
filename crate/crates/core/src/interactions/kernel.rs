//! Monte Carlo evaluation of `∫∫ f(ξ) f(η) |η⁻¹∘ξ|^{2-Q} dξ dη`, which is
//! `‖f‖²_{𝒟⁻¹} / c_Q` for the fundamental solution `c_Q |ξ|^{2-Q}` of `-L`.
//!
//! `ξ` is drawn from a mixture centred on the bubble cores. `η` is drawn from
//! the same mixture or, with probability `relative_weight`, from
//! `ξ ∘ δ_R(ω)` with `ln R` rising like `e^{2u}` at small `R`; that exactly
//! cancels the kernel singularity at `η = ξ`, so the weights stay bounded.

use serde::{Deserialize, Serialize};

use crate::bubbles::{eval_f, BubbleConfig, Constants};
use crate::error::{Error, Result};
use crate::group::{compose, dilate_unchecked, dist, hnorm, inverse, Dim, HPoint};
use crate::sampling::{monte_carlo, sample_direction, Estimate, Mixture, RadialLaw, RadialSampler};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub samples: usize,
    pub seed: u64,
    pub relative_weight: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            samples: 2_000_000,
            seed: 0x6b_e7e1,
            relative_weight: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelNorm {
    /// `c_Q ∫∫ f f |η⁻¹∘ξ|^{2-Q}`, an estimate of `‖f‖²_{𝒟⁻¹}`.
    pub value: f64,
    pub std_error: f64,
    pub c_q: f64,
    pub samples: usize,
}

impl KernelNorm {
    pub fn relative_error(&self) -> f64 {
        self.std_error / self.value.abs()
    }
}

/// Mixture with one component per core `(centre, λ)`, flat in `ln R` between
/// the core width `1/(2λ)` and `reach`.
pub fn pair_sampler(dim: Dim, cores: &[(HPoint, f64)], reach: f64) -> Result<Mixture> {
    if cores.is_empty() {
        return Err(Error::InvalidArgument("sampler needs at least one core".into()));
    }
    let q = dim.q();
    let comps = cores
        .iter()
        .map(|(c, lambda)| {
            let lo = 0.5 / lambda;
            Ok(RadialSampler::new(c.clone(), RadialLaw::new(q, 2.0, lo, reach.max(lo))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let w = vec![1.0; comps.len()];
    Mixture::new(comps, w)
}

/// `∫∫ f(ξ) f(η) |η⁻¹∘ξ|^{2-Q} dξ dη` by importance sampling.
pub fn kernel_double_integral<F>(
    dim: Dim,
    f: F,
    outer: &Mixture,
    relative: RadialLaw,
    opts: &KernelOptions,
) -> Result<Estimate>
where
    F: Fn(&HPoint) -> f64 + Sync,
{
    let w = opts.relative_weight;
    if !(0.0..1.0).contains(&w) || opts.samples < 2 {
        return Err(Error::InvalidArgument(
            "relative weight must lie in [0, 1) and at least two samples are needed".into(),
        ));
    }
    let power = 2.0 - dim.q();
    Ok(monte_carlo(opts.samples, opts.seed, |rng| {
        let xi = outer.sample(rng);
        let fx = f(&xi);
        let eta = if rand::Rng::random::<f64>(rng) < w {
            let omega = sample_direction(dim, rng);
            let r = relative.sample_log(rng).exp();
            compose(&xi, &dilate_unchecked(r, &omega)).expect("same dimension")
        } else {
            outer.sample(rng)
        };
        if fx == 0.0 {
            return 0.0;
        }
        let fe = f(&eta);
        let d = hnorm(&compose(&inverse(&xi), &eta).expect("same dimension"));
        if fe == 0.0 || d == 0.0 {
            return 0.0;
        }
        let q1 = outer.density(&xi);
        let q2 = w * RadialSampler::density_at_radius(&relative, dim, d) + (1.0 - w) * outer.density(&eta);
        fx * fe * d.powf(power) / (q1 * q2)
    }))
}

/// `c_Q ∫∫ f f |η⁻¹∘ξ|^{2-Q}` for the interaction term `f` of a configuration.
pub fn kernel_double_norm(k: &Constants, cfg: &BubbleConfig, c_q: f64, opts: &KernelOptions) -> Result<KernelNorm> {
    if cfg.len() < 2 {
        return Err(Error::InvalidArgument("kernel norm needs at least two bubbles".into()));
    }
    if !(c_q > 0.0) {
        return Err(Error::InvalidArgument(format!("c_Q must be positive, got {c_q}")));
    }
    let dim = k.dim();
    let gauges = cfg.gauges();
    let lmin = gauges.iter().map(|g| g.lambda()).fold(f64::INFINITY, f64::min);
    let lmax = gauges.iter().map(|g| g.lambda()).fold(0.0, f64::max);
    let mut reach: f64 = 4.0 / lmin;
    for a in gauges {
        for b in gauges {
            reach = reach.max(2.0 * dist(a.xi(), b.xi())?);
        }
    }
    let cores: Vec<(HPoint, f64)> = gauges.iter().map(|g| (g.xi().clone(), g.lambda())).collect();
    let outer = pair_sampler(dim, &cores, reach)?;
    let relative = RadialLaw::new(2.0, 2.0, 0.05 / lmax, reach)?;
    let est = kernel_double_integral(
        dim,
        |x| eval_f(k, cfg, x).expect("dimension checked"),
        &outer,
        relative,
        opts,
    )?;
    Ok(KernelNorm {
        value: c_q * est.value,
        std_error: c_q * est.std_error,
        c_q,
        samples: est.samples,
    })
}
