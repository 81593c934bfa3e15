use hstab_core::bubbles::{calibrate_c0, AxisBubble, BubbleConfig, Constants};
use hstab_core::fields::{config_grid, sample_f, sample_sigma, DEFAULT_BOX_RADIUS};
use hstab_core::fitter::{deficit, fit_bubbles, stability_quotient, FitOptions};
use hstab_core::grid::{AxiGrid, GridFn};
use hstab_core::solver::modes::{project_off, ModeBasis};
use hstab_core::solver::rho::{solve_rho, RhoOptions};
use hstab_core::solver::{dminus1_norm, SolverConfig};
use hstab_core::{Dim, Gauge};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn consts(n: usize) -> Constants {
    calibrate_c0(Dim::new(n).unwrap()).unwrap()
}

fn norm(grid: &AxiGrid, u: &GridFn) -> f64 {
    grid.d1_norm(u).unwrap()
}

fn bump(grid: &AxiGrid, amp: f64, t0: f64) -> GridFn {
    grid.sample(|r, t| amp * (-(r * r) - 0.25 * (t - t0).powi(2)).exp() * (1.0 + 0.3 * r * r))
}

#[test]
fn exact_bubbles_are_recovered_from_perturbed_starts() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x51);
    let opts = FitOptions::default();
    for n in 1..=2 {
        let k = consts(n);
        let cfg = BubbleConfig::on_axis(k.dim(), &[(1.0, 0.0)]).unwrap();
        let grid = config_grid(&cfg, 96, DEFAULT_BOX_RADIUS).unwrap();
        for _ in 0..25 {
            let lambda = rng.random_range(0.6..1.6);
            let t0 = rng.random_range(-1.5..1.5);
            let truth = AxisBubble::new(lambda, t0);
            let u = grid.sample(|r, t| truth.u(&k, r, t));
            let start = AxisBubble::new(
                lambda * (1.0 + 0.1 * rng.random_range(-1.0..1.0)),
                t0 + 0.1 * rng.random_range(-1.0..1.0) / (lambda * lambda),
            );
            let fit = fit_bubbles(&k, &grid, &u, &[start], &opts).unwrap();
            let b = fit.bubbles[0];
            assert!((b.lambda / lambda - 1.0).abs() < 1e-4, "n={n} {truth:?} -> {b:?}");
            assert!((b.t0 - t0).abs() * lambda * lambda < 1e-4, "n={n} {truth:?} -> {b:?}");
            assert!(fit.distance < 1e-6 * norm(&grid, &u));
            assert!(fit.residuals.iter().all(|r| r.abs() <= fit.tolerance));
            assert!(fit.trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}

#[test]
fn two_bubbles_with_perturbation() {
    let k = consts(1);
    let cfg = BubbleConfig::two_bubble(k.dim(), 0.05).unwrap();
    let grid = config_grid(&cfg, 160, DEFAULT_BOX_RADIUS).unwrap();
    let sigma = sample_sigma(&k, &cfg, &grid).unwrap();
    let raw = bump(&grid, 1.0, -10.0);
    let phi = raw.scaled(1e-3 / norm(&grid, &raw));
    let u = sigma.lin_comb(1.0, &phi, 1.0);
    let basis = ModeBasis::new(&k, &cfg, &grid).unwrap();
    let expected = norm(&grid, &project_off(&grid, &phi, &basis).unwrap());

    let init: Vec<AxisBubble> = cfg
        .gauges()
        .iter()
        .map(|g| {
            let b = AxisBubble::from_gauge(g).unwrap();
            AxisBubble::new(b.lambda * 1.05, b.t0 + 0.05)
        })
        .collect();
    let fit = fit_bubbles(&k, &grid, &u, &init, &FitOptions::default()).unwrap();
    assert!(fit.converged);
    assert!((fit.distance / expected - 1.0).abs() < 0.1, "{} vs {expected}", fit.distance);
    assert!(fit.residuals.iter().all(|r| r.abs() <= fit.tolerance), "{:?}", fit.residuals);
    assert!((fit.eps / 0.05 - 1.0).abs() < 0.01);
}

#[test]
fn bubble_sum_plus_correction_is_already_fitted() {
    let k = consts(2);
    let cfg = BubbleConfig::two_bubble(k.dim(), 0.05).unwrap();
    let grid = config_grid(&cfg, 160, DEFAULT_BOX_RADIUS).unwrap();
    let sol = solve_rho(&k, &cfg, &grid, &SolverConfig::default(), &RhoOptions::default()).unwrap();
    let u = sol.sigma.lin_comb(1.0, &sol.rho, 1.0);
    let truth: Vec<AxisBubble> = cfg.gauges().iter().map(|g| AxisBubble::from_gauge(g).unwrap()).collect();
    let fit = fit_bubbles(&k, &grid, &u, &truth, &FitOptions::default()).unwrap();
    for (a, b) in fit.bubbles.iter().zip(&truth) {
        assert!((a.lambda / b.lambda - 1.0).abs() < 1e-3, "{a:?} vs {b:?}");
        assert!((a.t0 - b.t0).abs() * b.lambda * b.lambda < 1e-3, "{a:?} vs {b:?}");
    }
    assert!((fit.distance / sol.rho_norm - 1.0).abs() < 1e-3);
}

#[test]
fn deficit_of_a_bubble_sum_is_the_dual_norm_of_f() {
    let k = consts(2);
    let solver = SolverConfig::default();
    for eps in [0.1, 0.05] {
        let cfg = BubbleConfig::two_bubble(k.dim(), eps).unwrap();
        let grid = config_grid(&cfg, 192, DEFAULT_BOX_RADIUS).unwrap();
        let sigma = sample_sigma(&k, &cfg, &grid).unwrap();
        let f = sample_f(&k, &cfg, &grid).unwrap();
        let want = dminus1_norm(&grid, &f, &solver).unwrap();
        let bubbles: Vec<AxisBubble> = cfg.gauges().iter().map(|g| AxisBubble::from_gauge(g).unwrap()).collect();
        // Around σ itself the identity is exact up to the solver tolerance.
        let split = deficit(&k, &grid, &sigma, &bubbles, &solver).unwrap();
        assert!((split / want - 1.0).abs() < 1e-6, "ε={eps}: {split} vs {want}");
        if eps == 0.1 {
            // Differentiating all of σ numerically adds truncation error.
            let direct = deficit(&k, &grid, &sigma, &[], &solver).unwrap();
            assert!((direct / want - 1.0).abs() < 0.02, "ε={eps}: {direct} vs {want}");
        }
    }
}

#[test]
fn direct_deficit_matches_dual_norm_of_discrete_residual() {
    let k = consts(1);
    let solver = SolverConfig::default();
    let cfg = BubbleConfig::two_bubble(k.dim(), 0.1).unwrap();
    let grid = config_grid(&cfg, 128, DEFAULT_BOX_RADIUS).unwrap();
    let sigma = sample_sigma(&k, &cfg, &grid).unwrap();
    let u = sigma.lin_comb(1.0, &bump(&grid, 0.01, -5.0), 1.0);
    let mut u0 = u.clone();
    grid.zero_boundary(&mut u0.values);
    let p = k.p();
    let h = grid
        .apply_sublap(&u0)
        .unwrap()
        .zip_map(&u0, |a, v| a + v.abs().powf(p - 1.0) * v);
    let want = dminus1_norm(&grid, &h, &solver).unwrap();
    let got = deficit(&k, &grid, &u0, &[], &solver).unwrap();
    assert!((got / want - 1.0).abs() < 1e-9, "{got} vs {want}");
    // Around the true bubbles only truncation error separates the two forms.
    let bg: Vec<AxisBubble> = cfg.gauges().iter().map(|g| AxisBubble::from_gauge(g).unwrap()).collect();
    let split = deficit(&k, &grid, &u0, &bg, &solver).unwrap();
    assert!((split / want - 1.0).abs() < 0.02, "{split} vs {want}");
}

#[test]
fn scaled_bubble_family() {
    // For u = (1+e)U the best bubble is U itself, the distance is e‖U‖ and the
    // deficit is |(1+e)^p - (1+e)| ‖U^p‖_{𝒟⁻¹} = |(1+e)^p - (1+e)| ‖U‖.
    let k = consts(1);
    let p = k.p();
    let solver = SolverConfig::default();
    let cfg = BubbleConfig::on_axis(k.dim(), &[(1.0, 0.0)]).unwrap();
    let grid = config_grid(&cfg, 128, DEFAULT_BOX_RADIUS).unwrap();
    let bubble = AxisBubble::new(1.0, 0.0);
    let mut base = grid.sample(|r, t| bubble.u(&k, r, t));
    grid.zero_boundary(&mut base.values);
    let unorm = norm(&grid, &base);
    let mut quotients = Vec::new();
    for e in [1e-1, 1e-2, 1e-3] {
        let u = base.scaled(1.0 + e);
        let q = stability_quotient(&k, &grid, &u, &[AxisBubble::new(1.05, 0.05)], &FitOptions::default(), &solver)
            .unwrap();
        let want = ((1.0 + e).powf(p) - (1.0 + e)).abs() * unorm;
        assert!((q.deficit / want - 1.0).abs() < 0.01, "e={e}: {} vs {want}", q.deficit);
        let b = q.fit.bubbles[0];
        assert!((q.fit.distance / (e * unorm) - 1.0).abs() < 1e-3, "e={e}: {} vs {}", q.fit.distance, e * unorm);
        assert!((b.lambda - 1.0).abs() < 1e-3 && b.t0.abs() < 1e-3, "{b:?}");
        quotients.push(q.quotient);
    }
    let max = quotients.iter().cloned().fold(0.0, f64::max);
    let min = quotients.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max / min < 1.2, "{quotients:?}");
    assert!((quotients[2] - 1.0 / (p - 1.0)).abs() < 0.01, "{quotients:?}");
}

#[test]
fn distance_is_gauge_invariant() {
    let k = consts(1);
    let n = k.n() as f64;
    let cfg = BubbleConfig::two_bubble(k.dim(), 0.1).unwrap();
    let (mu, s) = (1.7, 3.0);
    let g = Gauge::on_axis(k.dim(), mu, s).unwrap();
    let moved = cfg.transported(&g).unwrap();
    let opts = FitOptions::default();

    let run = |c: &BubbleConfig, transform: &dyn Fn(f64, f64) -> (f64, f64, f64)| {
        let grid = config_grid(c, 192, DEFAULT_BOX_RADIUS).unwrap();
        let base: Vec<AxisBubble> = cfg.gauges().iter().map(|g| AxisBubble::from_gauge(g).unwrap()).collect();
        let u = grid.sample(|r, t| {
            let (a, rr, tt) = transform(r, t);
            a * (base.iter().map(|b| b.u(&k, rr, tt)).sum::<f64>()
                + 0.01 * (-(rr * rr) - 0.25 * (tt + 5.0).powi(2)).exp())
        });
        let init: Vec<AxisBubble> = c
            .gauges()
            .iter()
            .map(|g| {
                let b = AxisBubble::from_gauge(g).unwrap();
                AxisBubble::new(b.lambda * 1.02, b.t0)
            })
            .collect();
        fit_bubbles(&k, &grid, &u, &init, &opts).unwrap().distance
    };
    let d0 = run(&cfg, &|r, t| (1.0, r, t));
    let d1 = run(&moved, &|r, t| (mu.powf(n), mu * r, mu * mu * (t - s)));
    assert!((d1 / d0 - 1.0).abs() < 0.01, "{d0} vs {d1}");
}
