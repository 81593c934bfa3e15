use hstab_core::bubbles::{calibrate_c0, eval_gauge_u, BubbleConfig, Constants};
use hstab_core::fields::{box_radius, config_grid, sample_f, DEFAULT_BOX_RADIUS};
use hstab_core::green::closed_form_constant;
use hstab_core::interactions::{
    expansion_check, f_lp_norm, kernel_double_integral, kernel_double_norm, pair_integral, pair_leading_constant,
    pair_sampler, pairing_lower_bound, zmode_limit, zmode_ratio, KernelOptions,
};
use hstab_core::quadrature::QuadratureOptions;
use hstab_core::sampling::{monte_carlo, Mixture, RadialLaw, RadialSampler};
use hstab_core::solver::{dminus1_norm, SolverConfig};
use hstab_core::{Dim, Gauge, HPoint};
use proptest::prelude::*;

fn consts(n: usize) -> Constants {
    calibrate_c0(Dim::new(n).unwrap()).unwrap()
}

fn quad() -> QuadratureOptions {
    QuadratureOptions::default()
}

// The n = 3 integrands are rougher in the tails.
fn quad_loose() -> QuadratureOptions {
    QuadratureOptions {
        tolerance: 1e-6,
        max_halvings: 6,
        ..quad()
    }
}

#[test]
fn pair_integral_matches_full_coordinate_monte_carlo() {
    for (n, alpha, beta) in [(1, 3.0, 1.0), (2, 2.0, 1.0)] {
        let k = consts(n);
        let dim = k.dim();
        let eps = 0.05;
        let q = pair_integral(&k, alpha, beta, 1.0, 1.0 / eps, &quad()).unwrap();
        let g0 = Gauge::identity(dim);
        let g1 = Gauge::on_axis(dim, 1.0, 1.0 / eps).unwrap();
        let cores = vec![(g0.xi().clone(), 1.0), (g1.xi().clone(), 1.0)];
        let mix = pair_sampler(dim, &cores, 4.0 / eps.sqrt()).unwrap();
        let est = monte_carlo(400_000, 17, |rng| {
            let x = mix.sample(rng);
            let u = eval_gauge_u(&k, &g0, &x).unwrap();
            let v = eval_gauge_u(&k, &g1, &x).unwrap();
            u.powf(alpha) * v.powf(beta) / mix.density(&x)
        });
        assert!(est.relative_error() < 0.01, "{est:?}");
        assert!((est.value / q.value - 1.0).abs() < 0.03, "n={n}: MC {est:?} vs quadrature {q:?}");
    }
}

#[test]
fn leading_term_of_pair_integral() {
    let k = consts(1);
    let mut last = 0.0;
    for eps in [1e-1, 1e-2, 1e-3] {
        let lt = pair_leading_constant(&k, 3.0, 1.0, 1.0, 1.0 / eps, &quad()).unwrap();
        let gap = (lt.ratio() - 1.0).abs();
        if last > 0.0 {
            assert!(gap < last, "ε={eps}: {lt:?}");
        }
        last = gap;
    }
    assert!(last < 1e-3);
}

#[test]
fn zmode_ratio_approaches_its_limit() {
    for n in 1..=2 {
        let k = consts(n);
        let limit = zmode_limit(k.dim());
        let gaps: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|e| {
                let z = zmode_ratio(&k, 1.0, 1.0 / e, &quad()).unwrap();
                (z.ratio / limit - 1.0).abs()
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "n={n}: {gaps:?}");
        assert!(gaps[2] < 1e-3, "n={n}: {gaps:?}");
    }
}

#[test]
fn expansion_residual_shrinks() {
    let k = consts(1);
    let mut prev = f64::INFINITY;
    for eps in [1e-1, 1e-2, 1e-3] {
        let cfg = BubbleConfig::two_bubble(k.dim(), eps).unwrap();
        let chk = expansion_check(&k, &cfg, &quad()).unwrap();
        assert!(chk.normalized_residual < prev, "{chk:?}");
        prev = chk.normalized_residual;
        if eps == 1e-3 {
            assert!(chk.relative_residual < 0.1, "{chk:?}");
        }
    }
}

#[test]
fn pairing_bound_sits_below_the_dual_norm() {
    let k = consts(3);
    let solver = SolverConfig::default();
    for eps in [1e-2, 1e-3] {
        let cfg = BubbleConfig::two_bubble(k.dim(), eps).unwrap();
        let grid = config_grid(&cfg, 256, box_radius(&cfg).unwrap()).unwrap();
        let f = sample_f(&k, &cfg, &grid).unwrap();
        let upper = dminus1_norm(&grid, &f, &solver).unwrap();
        let lower = pairing_lower_bound(&k, &cfg, &quad_loose()).unwrap();
        assert!(lower.bound > 0.0 && lower.bound < upper, "ε={eps}: {} vs {upper}", lower.bound);
    }
}

#[test]
fn f_lp_norm_local_slope_in_high_dimension() {
    let k = consts(3);
    let opts = quad_loose();
    let v = |e: f64| {
        let cfg = BubbleConfig::two_bubble(k.dim(), e).unwrap();
        f_lp_norm(&k, &cfg, &opts).unwrap().value
    };
    let (a, b) = (2e-3, 1e-3);
    let slope = (v(a) / v(b)).ln() / (a / b).ln();
    assert!(slope > 3.9 && slope < 4.05, "{slope}");
}

#[test]
fn kernel_norm_matches_poisson_solve() {
    let k = consts(2);
    let cfg = BubbleConfig::two_bubble(k.dim(), 0.05).unwrap();
    let grid = config_grid(&cfg, 256, DEFAULT_BOX_RADIUS).unwrap();
    let f = sample_f(&k, &cfg, &grid).unwrap();
    let poisson = dminus1_norm(&grid, &f, &SolverConfig::default()).unwrap().powi(2);
    let kn = kernel_double_norm(&k, &cfg, closed_form_constant(k.dim()), &KernelOptions::default()).unwrap();
    assert!(kn.relative_error() < 0.02, "{kn:?}");
    assert!((kn.value / poisson - 1.0).abs() < 0.1, "{} vs {poisson}", kn.value);
}

#[test]
fn green_function_inverts_the_discrete_operator() {
    // A compactly supported source needs no cancellation between bubbles.
    let k = consts(1);
    let dim = k.dim();
    let profile = |r: f64, t: f64| {
        let s = (r.powi(4) + t * t) / 4.0;
        if s < 1.0 {
            (1.0 - s).powi(3) * (1.0 + 0.5 * t)
        } else {
            0.0
        }
    };
    let cfg = BubbleConfig::on_axis(dim, &[(1.0, 0.0)]).unwrap();
    let grid = config_grid(&cfg, 256, DEFAULT_BOX_RADIUS).unwrap();
    let f = grid.sample(profile);
    let poisson = dminus1_norm(&grid, &f, &SolverConfig::default()).unwrap().powi(2);

    let q = dim.q();
    let outer = Mixture::new(
        vec![RadialSampler::new(HPoint::origin(dim), RadialLaw::new(q, 8.0, 0.7, 1.5).unwrap())],
        vec![1.0],
    )
    .unwrap();
    let relative = RadialLaw::new(2.0, 2.0, 0.01, 3.0).unwrap();
    let opts = KernelOptions {
        samples: 1_000_000,
        ..KernelOptions::default()
    };
    let est = kernel_double_integral(dim, |x| profile(x.z_norm2().sqrt(), x.t()), &outer, relative, &opts).unwrap();
    let kernel = closed_form_constant(dim) * est.value;
    assert!(est.relative_error() < 0.01, "{est:?}");
    assert!((kernel / poisson - 1.0).abs() < 0.05, "{kernel} vs {poisson}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn pair_integral_is_gauge_symmetric(lambda in 0.5f64..2.0, t0 in -6.0f64..6.0) {
        // Pulling back by the second bubble's gauge swaps the roles of the two.
        let k = consts(1);
        let a = pair_integral(&k, 3.0, 1.0, lambda, t0, &quad()).unwrap();
        let b = pair_integral(&k, 1.0, 3.0, 1.0 / lambda, -lambda * lambda * t0, &quad()).unwrap();
        prop_assert!((a.value / b.value - 1.0).abs() < 1e-7, "{:?} {:?}", a, b);
        prop_assert!((a.eps / b.eps - 1.0).abs() < 1e-12);
    }
}
