use penfbm::gaussgen::{fbm_covariance, rescale, time_reverse, time_reversed_covariance};
use penfbm::{EstimateWithError, FbmGenerator, HurstParam, Method, Seed, TimeGrid};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reversal_preserves_covariance(h in 0.05f64..0.95, s in 0.0f64..3.0, t in 0.0f64..3.0) {
        let hp = HurstParam::new(h).unwrap();
        let direct = fbm_covariance(hp, s, t);
        let reversed = time_reversed_covariance(hp, 3.0, s, t);
        prop_assert!((direct - reversed).abs() < 1e-12);
    }

    #[test]
    fn covariance_scales_with_hurst_exponent(h in 0.05f64..0.95, s in 0.01f64..1.0, t in 0.01f64..1.0, a in 0.5f64..20.0) {
        let hp = HurstParam::new(h).unwrap();
        let lhs = fbm_covariance(hp, a * s, a * t);
        let rhs = a.powf(2.0 * h) * fbm_covariance(hp, s, t);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }
}

#[test]
fn reversed_paths_keep_the_increment_covariance() {
    let hp = HurstParam::new(0.7).unwrap();
    let grid = TimeGrid::new(2.0, 16).unwrap();
    let gen = FbmGenerator::new(hp, grid, Method::Circulant).unwrap();
    let prods = gen.map_paths(Seed::new(8), 40_000, |p, _| {
        let r = time_reverse(p);
        r.values[4] * r.values[12]
    });
    let est = EstimateWithError::from_samples(&prods);
    let exact = fbm_covariance(hp, grid.time(4), grid.time(12));
    assert!(est.within_sigma(exact, 4.0), "{} ± {} vs {exact}", est.value, est.stderr);
}

#[test]
fn rescaled_endpoint_has_unit_variance() {
    let hp = HurstParam::new(0.3).unwrap();
    let horizon = 50.0;
    let grid = TimeGrid::new(horizon, 500).unwrap();
    let gen = FbmGenerator::new(hp, grid, Method::Auto).unwrap();
    let sq = gen.map_paths(Seed::new(9), 40_000, |p, _| rescale(p, horizon, hp).last().powi(2));
    let est = EstimateWithError::from_samples(&sq);
    assert!(est.within_sigma(1.0, 4.0), "{} ± {}", est.value, est.stderr);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let gen = FbmGenerator::new(HurstParam::new(0.65).unwrap(), TimeGrid::unit(128).unwrap(), Method::Auto)
        .unwrap();
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| gen.sample_many(Seed::new(3), 300))
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn single_path_equals_its_stream_in_a_batch() {
    let gen = FbmGenerator::new(HurstParam::new(0.4).unwrap(), TimeGrid::unit(64).unwrap(), Method::Cholesky)
        .unwrap();
    let batch = gen.sample_many(Seed::new(5), 10);
    assert_eq!(gen.sample(Seed::new(5).child(7)), batch[7]);
}
