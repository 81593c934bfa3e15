//! Importance samplers on ℍⁿ built from the homogeneous polar decomposition
//! `ξ = c ∘ δ_R(ω)`, `|ω| = 1`, for which `dξ = R^{Q-1} dR dσ(ω)`.
//!
//! Directions `ω` are drawn by normalising a sample of the density
//! `∝ exp(-|ζ|⁴) = exp(-|z|⁴ - t²)`, which depends on `ζ` only through its
//! homogeneous norm and therefore induces the normalised surface measure.
//! Radii follow a law in `u = ln R` that rises like `e^{a u}` below `u_lo`, is
//! flat on `[u_lo, u_hi]`, and decays like `e^{-γ u}` above `u_hi`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::group::{compose, dilate_unchecked, hnorm, inverse, Dim, HPoint};

/// Piecewise log-exponential law for `u = ln R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialLaw {
    pub inner_power: f64,
    pub outer_power: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

impl RadialLaw {
    pub fn new(inner_power: f64, outer_power: f64, r_lo: f64, r_hi: f64) -> Result<Self> {
        if !(inner_power > 0.0 && outer_power > 0.0 && r_lo > 0.0 && r_hi >= r_lo) {
            return Err(Error::InvalidArgument(format!(
                "radial law needs positive powers and 0 < r_lo <= r_hi \
                 (a={inner_power}, γ={outer_power}, r_lo={r_lo}, r_hi={r_hi})"
            )));
        }
        Ok(RadialLaw {
            inner_power,
            outer_power,
            r_lo,
            r_hi,
        })
    }

    fn masses(&self) -> (f64, f64, f64) {
        let flat = (self.r_hi / self.r_lo).ln();
        (1.0 / self.inner_power, flat, 1.0 / self.outer_power)
    }

    /// Density of `u = ln R`.
    pub fn density_log(&self, u: f64) -> f64 {
        let (a, b, c) = self.masses();
        let total = a + b + c;
        let (ulo, uhi) = (self.r_lo.ln(), self.r_hi.ln());
        let shape = if u < ulo {
            (self.inner_power * (u - ulo)).exp()
        } else if u <= uhi {
            1.0
        } else {
            (-self.outer_power * (u - uhi)).exp()
        };
        shape / total
    }

    pub fn sample_log<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (a, b, c) = self.masses();
        let total = a + b + c;
        let (ulo, uhi) = (self.r_lo.ln(), self.r_hi.ln());
        let pick: f64 = rng.random::<f64>() * total;
        // 1 - U lies in (0, 1], so the logarithms stay finite.
        let v: f64 = 1.0 - rng.random::<f64>();
        if pick < a {
            ulo + v.ln() / self.inner_power
        } else if pick < a + b {
            ulo + (uhi - ulo) * rng.random::<f64>()
        } else {
            uhi - v.ln() / self.outer_power
        }
    }
}

/// `Q|B_1| = σ(S)`, the surface measure of the unit homogeneous sphere.
pub fn unit_sphere_measure(dim: Dim) -> f64 {
    let n = dim.n() as f64;
    let z0 = dim.sphere_area() * 0.25 * gamma(n / 2.0) * std::f64::consts::PI.sqrt();
    4.0 * z0 / gamma(dim.q() / 4.0)
}

/// Point of the unit homogeneous sphere distributed by normalised surface
/// measure.
pub fn sample_direction<R: Rng + ?Sized>(dim: Dim, rng: &mut R) -> HPoint {
    let n = dim.n();
    let radial = Gamma::new(n as f64 / 2.0, 1.0).expect("valid gamma shape");
    let t_dist = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal");
    loop {
        let mut flat: Vec<f64> = (0..2 * n)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        let norm = flat.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let r = Distribution::<f64>::sample(&radial, rng).powf(0.25);
        for v in flat.iter_mut() {
            *v *= r / norm;
        }
        flat.push(t_dist.sample(rng));
        let zeta = HPoint::from_flat(&flat).expect("finite sample");
        let len = hnorm(&zeta);
        if len > 0.0 {
            return dilate_unchecked(1.0 / len, &zeta);
        }
    }
}

/// `ξ = c ∘ δ_R(ω)` with `ln R` drawn from a [`RadialLaw`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialSampler {
    pub center: HPoint,
    pub law: RadialLaw,
}

impl RadialSampler {
    pub fn new(center: HPoint, law: RadialLaw) -> Self {
        RadialSampler { center, law }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HPoint {
        let dim = self.center.dim();
        let omega = sample_direction(dim, rng);
        let r = self.law.sample_log(rng).exp();
        compose(&self.center, &dilate_unchecked(r, &omega)).expect("same dimension")
    }

    /// Haar density at `ξ`: `φ(ln R)/(σ(S) R^Q)` with `R = |c⁻¹∘ξ|`.
    pub fn density(&self, xi: &HPoint) -> f64 {
        let rel = compose(&inverse(&self.center), xi).expect("same dimension");
        let dim = xi.dim();
        Self::density_at_radius(&self.law, dim, hnorm(&rel))
    }

    pub fn density_at_radius(law: &RadialLaw, dim: Dim, r: f64) -> f64 {
        if r == 0.0 {
            return f64::INFINITY;
        }
        law.density_log(r.ln()) / (unit_sphere_measure(dim) * r.powf(dim.q()))
    }
}

/// Finite mixture of radial samplers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mixture {
    pub components: Vec<RadialSampler>,
    pub weights: Vec<f64>,
}

impl Mixture {
    pub fn new(components: Vec<RadialSampler>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(Error::InvalidArgument(
                "mixture needs one positive weight per component".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidArgument("mixture weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        Ok(Mixture {
            components,
            weights: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HPoint {
        let mut pick: f64 = rng.random();
        for (c, w) in self.components.iter().zip(&self.weights) {
            if pick < *w {
                return c.sample(rng);
            }
            pick -= w;
        }
        self.components[self.components.len() - 1].sample(rng)
    }

    pub fn density(&self, xi: &HPoint) -> f64 {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * c.density(xi))
            .sum()
    }
}

/// Mean and standard error of a sample of weighted values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn relative_error(&self) -> f64 {
        self.std_error / self.value.abs()
    }
}

/// Running accumulator with Welford updates.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.count == 0 {
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn estimate(&self) -> Estimate {
        let var = if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            f64::INFINITY
        };
        Estimate {
            value: self.mean,
            std_error: (var / self.count as f64).sqrt(),
            samples: self.count,
        }
    }
}

/// Worker count: `HSTAB_THREADS` if set to a positive integer, otherwise the
/// available parallelism.
pub fn thread_count() -> usize {
    std::env::var("HSTAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |t| t.get()))
}

/// Number of independent random streams a Monte Carlo run is split into.
/// Fixed, so results do not depend on the thread count.
pub const STREAMS: usize = 32;

/// Mean of `draw` over `samples` draws, split into [`STREAMS`] ChaCha streams
/// keyed by `seed` and merged in stream order.
pub fn monte_carlo<F>(samples: usize, seed: u64, draw: F) -> Estimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    monte_carlo_with_threads(samples, seed, thread_count(), draw)
}

pub fn monte_carlo_with_threads<F>(samples: usize, seed: u64, threads: usize, draw: F) -> Estimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let per = samples.div_ceil(STREAMS).max(1);
    let workers = threads.clamp(1, STREAMS);
    let mut parts = vec![Accumulator::default(); STREAMS];
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results = std::sync::Mutex::new(&mut parts);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let s = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if s >= STREAMS {
                    break;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(s as u64);
                let mut acc = Accumulator::default();
                for _ in 0..per {
                    acc.push(draw(&mut rng));
                }
                results.lock().expect("no panics while holding the lock")[s] = acc;
            });
        }
    });
    let mut total = Accumulator::default();
    for part in &parts {
        total.merge(part);
    }
    total.estimate()
}
