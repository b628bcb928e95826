//! Closed-form Brownian oracles for the samplers, the limit law and the
//! meander kernel.

use penfbm::gaussgen::brownian_bridge_min;
use penfbm::penalize::{sample_conditioned_rejection, self_normalized_mean};
use penfbm::quadrature::{integrate, integrate_to_infinity};
use penfbm::sde::{h_harmonic, meander_transition_density, normal_cdf, E_NEG_MIN_BROWNIAN};
use penfbm::{FbmGenerator, HurstParam, Method, Seed, TimeGrid};
use rand::Rng;

/// Exact minimum over the whole path, one bridge per step.
fn bridge_min(values: &[f64], dt: f64, rng: &mut impl Rng) -> f64 {
    values
        .windows(2)
        .map(|w| brownian_bridge_min(w[0], w[1], dt, rng.random::<f64>().max(f64::MIN_POSITIVE)))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn limit_law_endpoint_mean() {
    // E[B(1)(B(1) − M(1))] = 1/2 for Brownian motion.
    let grid = TimeGrid::unit(64).unwrap();
    let gen = FbmGenerator::new(HurstParam::brownian(), grid, Method::Auto).unwrap();
    let dt = grid.dt();
    let pairs = gen.map_paths(Seed::new(41), 200_000, |p, rng| {
        let m = bridge_min(&p.values, dt, rng);
        (p.last(), p.last() - m)
    });
    let (x, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let est = self_normalized_mean(&x, &w);
    let exact = 0.5 / E_NEG_MIN_BROWNIAN;
    assert!(
        (est.value - exact).abs() < 4.0 * est.stderr,
        "{} ± {} vs {exact}",
        est.value,
        est.stderr
    );
}

#[test]
fn h_harmonic_matches_survival_with_bridge_crossings() {
    let grid = TimeGrid::new(0.6, 32).unwrap();
    let gen = FbmGenerator::new(HurstParam::brownian(), grid, Method::Auto).unwrap();
    let x0 = 0.5;
    let survived = gen.map_paths(Seed::new(2), 100_000, |p, rng| {
        let shifted: Vec<f64> = p.values.iter().map(|v| v + x0).collect();
        (bridge_min(&shifted, grid.dt(), rng) > 0.0) as u8 as f64
    });
    let est = penfbm::EstimateWithError::from_samples(&survived);
    let exact = h_harmonic(0.4, x0);
    assert!(est.within_sigma(exact, 4.0), "{} ± {} vs {exact}", est.value, est.stderr);
}

#[test]
fn meander_kernel_is_a_probability_density() {
    for (t, x, s) in [(0.0, 0.3, 0.5), (0.2, 1.0, 0.3), (0.5, 0.05, 0.5), (0.1, 2.0, 0.9)] {
        let mass = integrate_to_infinity(
            |y| meander_transition_density(t, x, s, y).unwrap(),
            0.0,
            1e-13,
            1e-12,
        );
        assert!((mass.value - 1.0).abs() < 1e-6, "t={t} x={x} s={s}: {}", mass.value);
    }
}

#[test]
fn meander_kernel_chapman_kolmogorov() {
    let (t, x, s1, s2, y) = (0.1, 0.4, 0.3, 0.4, 0.7);
    let direct = meander_transition_density(t, x, s1 + s2, y).unwrap();
    let via = integrate_to_infinity(
        |z| {
            meander_transition_density(t, x, s1, z).unwrap()
                * meander_transition_density(t + s1, z, s2, y).unwrap()
        },
        0.0,
        1e-13,
        1e-12,
    );
    assert!((via.value - direct).abs() < 1e-4, "{} vs {direct}", via.value);
}

#[test]
fn rejection_rate_matches_reflection_principle() {
    // Grid minima miss excursions; shifting the barrier by 0.5826·√dt
    // corrects the discrete monitoring to leading order.
    let (horizon, n_steps) = (1.0, 4096);
    let out = sample_conditioned_rejection(
        HurstParam::brownian(),
        horizon,
        n_steps,
        20_000,
        200_000,
        Seed::new(17),
    )
    .unwrap();
    let dt: f64 = horizon / n_steps as f64;
    let barrier = 1.0 + 0.5826 * dt.sqrt();
    let exact = 2.0 * normal_cdf(horizon, barrier) - 1.0;
    let a = out.acceptance;
    assert!(a.within_sigma(exact, 4.0), "{} ± {} vs {exact}", a.value, a.stderr);
    assert!(out.ensemble.paths.iter().all(|p| p.min() >= -1.0));
}

#[test]
fn quadrature_reproduces_gaussian_moments() {
    let m4 = integrate_to_infinity(|r| r.powi(4) * (-r * r / 2.0).exp(), 0.0, 1e-14, 1e-13);
    let exact = 1.5 * (2.0 * std::f64::consts::PI).sqrt();
    assert!((m4.value - exact).abs() < 1e-11);
    let q = integrate(|x: f64| x.cos(), 0.0, std::f64::consts::PI / 2.0, 1e-15, 1e-14);
    assert!((q.value - 1.0).abs() < 1e-13);
}
