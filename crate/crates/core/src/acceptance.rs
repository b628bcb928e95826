//! The acceptance suite: ten numerical criteria run at fixed seeds.
//!
//! Every criterion is a list of [`Check`]s with a recorded value and bound.
//! Reports carry no timings, so equal seeds give byte-identical JSON.

use std::collections::BTreeMap;
use std::time::Duration;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimate::EstimateWithError;
use crate::gaussgen::{
    brownian_bridge_min, fbm_covariance, FbmGenerator, HurstParam, Method, Path, TimeGrid,
};
use crate::limitlaw::{asymmetry, normalizer_brownian_bridge, sample_limit_law_with};
use crate::penalize::{rate_study, sample_penalized_with, steps_for, DEFAULT_ESS_FLOOR};
use crate::quadrature::{integrate, integrate_to_infinity};
use crate::rng::{par_map_streams, Seed};
use crate::sde::{
    cond_expect_endpoint_gap, density_process, drift_meander, drift_penalized, euler_endpoints,
    martingale_integrand, meander_normalizer, sample_bessel_endpoint_exact, shiryaev_residual,
    tail_integral, DriftKind, DriftSpec, E_NEG_MIN_BROWNIAN,
};
use crate::stats::{
    bootstrap_ci, ks_against_cdf, ks_distance, modulus_of_continuity, two_sample_test,
    WeightedSample,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const CRITERIA: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Sample sizes as specified for each criterion.
    Full,
    /// Small smoke-test sizes; thresholds are unchanged and may fail.
    Quick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<="`, `">="`, `">"` or `"=="` against `bound`.
    pub relation: String,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, relation: "<=".into(), bound, pass: value <= bound }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, relation: ">=".into(), bound, pass: value >= bound }
    }

    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, relation: ">".into(), bound, pass: value > bound }
    }

    /// A boolean property, recorded as `1 == 1` or `0 == 1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        let value = if ok { 1.0 } else { 0.0 };
        Check { name: name.into(), value, relation: "==".into(), bound: 1.0, pass: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
}

impl CriterionResult {
    fn new(id: u8, checks: Vec<Check>, metrics: BTreeMap<String, f64>) -> Self {
        CriterionResult {
            id,
            title: title(id).to_string(),
            pass: checks.iter().all(|c| c.pass),
            checks,
            metrics,
        }
    }

    /// One line: `criterion 3 [molchan-rate] PASS (4/4 checks)`.
    pub fn summary_line(&self) -> String {
        let passed = self.checks.iter().filter(|c| c.pass).count();
        let mut line = format!(
            "criterion {} [{}] {} ({}/{} checks)",
            self.id,
            self.title,
            if self.pass { "PASS" } else { "FAIL" },
            passed,
            self.checks.len()
        );
        for c in self.checks.iter().filter(|c| !c.pass) {
            line.push_str(&format!("; failed {}: {} {} {}", c.name, c.value, c.relation, c.bound));
        }
        line
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub schema_version: u32,
    pub library_version: String,
    pub profile: Profile,
    pub seed: u64,
    pub pass: bool,
    pub criteria: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "gaussian-law",
        2 => "normalizer",
        3 => "molchan-rate",
        4 => "penalized-limit",
        5 => "asymmetry",
        6 => "sde-law",
        7 => "meander-bessel",
        8 => "drift-lattice",
        9 => "proof-formulas",
        10 => "tightness",
        _ => "unknown",
    }
}

/// Wall-clock budget of a criterion at the full profile, where one is set.
pub fn runtime_budget(id: u8) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(120)),
        2 => Some(Duration::from_secs(300)),
        3 => Some(Duration::from_secs(1200)),
        _ => None,
    }
}

/// Sample sizes of one profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Sizes {
    pub cov_paths: usize,
    pub cov_points: usize,
    pub ks_paths: usize,
    pub normalizer_paths: usize,
    pub normalizer_steps: usize,
    pub rate_paths: usize,
    pub rate_horizons: Vec<f64>,
    pub steps_per_unit: usize,
    pub penalized_paths: usize,
    pub limit_paths: usize,
    pub limit_steps: usize,
    pub trend_horizons: Vec<f64>,
    pub boot: usize,
    pub asym_paths: usize,
    pub euler_paths: usize,
    pub euler_steps: usize,
    pub oracle_paths: usize,
    pub lattice: usize,
    pub residual_paths: usize,
    pub residual_steps: (usize, usize),
    pub forward_paths: usize,
    pub tight_paths: usize,
    pub tight_grid: usize,
}

impl Sizes {
    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Full => Sizes {
                cov_paths: 20_000,
                cov_points: 32,
                ks_paths: 100_000,
                normalizer_paths: 1_000_000,
                normalizer_steps: 1024,
                rate_paths: 100_000,
                rate_horizons: vec![64.0, 256.0, 1024.0],
                steps_per_unit: 64,
                penalized_paths: 200_000,
                limit_paths: 200_000,
                limit_steps: 1024,
                trend_horizons: vec![16.0, 64.0, 256.0],
                boot: 1000,
                asym_paths: 100_000,
                euler_paths: 100_000,
                euler_steps: 10_000,
                oracle_paths: 1_000_000,
                lattice: 100,
                residual_paths: 10_000,
                residual_steps: (1000, 2000),
                forward_paths: 100_000,
                tight_paths: 100_000,
                tight_grid: 1024,
            },
            Profile::Quick => Sizes {
                cov_paths: 2000,
                cov_points: 8,
                ks_paths: 2000,
                normalizer_paths: 5000,
                normalizer_steps: 128,
                rate_paths: 1000,
                rate_horizons: vec![4.0, 8.0, 16.0],
                steps_per_unit: 16,
                penalized_paths: 2000,
                limit_paths: 2000,
                limit_steps: 128,
                trend_horizons: vec![2.0, 4.0, 8.0],
                boot: 50,
                asym_paths: 2000,
                euler_paths: 1000,
                euler_steps: 200,
                oracle_paths: 5000,
                lattice: 10,
                residual_paths: 500,
                residual_steps: (100, 200),
                forward_paths: 2000,
                tight_paths: 1000,
                tight_grid: 32,
            },
        }
    }
}

/// Run one criterion. Criterion `id` draws from stage `16 · id` onward.
pub fn run_criterion(id: u8, profile: Profile, seed: Seed) -> Result<CriterionResult> {
    let sizes = Sizes::for_profile(profile);
    let base = seed.stage(16 * id as u64);
    match id {
        1 => gaussian_law(&sizes, base),
        2 => normalizer(&sizes, base),
        3 => molchan_rate(&sizes, base),
        4 => penalized_limit(&sizes, base),
        5 => asymmetry_sign(&sizes, base),
        6 => sde_law(&sizes, base),
        7 => meander_bessel(&sizes, base),
        8 => drift_lattice(&sizes),
        9 => proof_formulas(&sizes, base),
        10 => tightness(&sizes, base),
        _ => Err(crate::error::Error::param("id", format!("no criterion {id}"))),
    }
}

/// Criteria 1–10 in order. `on_result` sees each result as it completes.
pub fn run_suite(
    profile: Profile,
    seed: Seed,
    mut on_result: impl FnMut(&CriterionResult),
) -> Result<AcceptanceReport> {
    let mut criteria = Vec::with_capacity(CRITERIA.len());
    for id in CRITERIA {
        let r = run_criterion(id, profile, seed)?;
        on_result(&r);
        criteria.push(r);
    }
    Ok(AcceptanceReport {
        schema_version: REPORT_SCHEMA_VERSION,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        profile,
        seed: seed.master,
        pass: criteria.iter().all(|c| c.pass),
        criteria,
    })
}

fn hurst(h: f64) -> HurstParam {
    HurstParam::new(h).expect("suite Hurst values lie in (0, 1)")
}

fn key(prefix: &str, h: f64) -> String {
    format!("{prefix}_h{h}")
}

fn gaussian_law(s: &Sizes, seed: Seed) -> Result<CriterionResult> {
    let mut checks = Vec::new();
    let mut metrics = BTreeMap::new();
    for (k, h) in [0.3, 0.5, 0.8].into_iter().enumerate() {
        let hp = hurst(h);
        let grid = TimeGrid::unit(s.cov_points)?;
        let chol = FbmGenerator::new(hp, grid, Method::Cholesky)?;
        let paths = chol.sample_many(seed.stage(3 * k as u64), s.cov_paths);
        let mut worst: f64 = 0.0;
        for i in 1..=s.cov_points {
            for j in i..=s.cov_points {
                let prods: Vec<f64> = paths.iter().map(|p| p.values[i] * p.values[j]).collect();
                let est = EstimateWithError::from_samples(&prods);
                let target = fbm_covariance(hp, grid.time(i), grid.time(j));
                worst = worst.max((est.value - target).abs() / est.stderr);
            }
        }
        checks.push(Check::at_most(key("max_cov_z", h), worst, 4.0));

        let x1 = |method, stage| -> Result<WeightedSample> {
            let gen = FbmGenerator::new(hp, grid, method)?;
            WeightedSample::uniform(gen.map_paths(seed.stage(stage), s.ks_paths, |p, _| p.last()))
        };
        let ks = ks_distance(
            &x1(Method::Circulant, 3 * k as u64 + 1)?,
            &x1(Method::Cholesky, 3 * k as u64 + 2)?,
        );
        checks.push(Check::at_most(key("ks_circulant_cholesky", h), ks, 0.02));
        metrics.insert(key("max_cov_z", h), worst);
        metrics.insert(key("ks_circulant_cholesky", h), ks);
    }
    Ok(CriterionResult::new(1, checks, metrics))
}

fn normalizer(s: &Sizes, seed: Seed) -> Result<CriterionResult> {
    let est = normalizer_brownian_bridge(s.normalizer_steps, s.normalizer_paths, seed)?;
    let rel = est.bridge.relative_error(E_NEG_MIN_BROWNIAN);
    let metrics = BTreeMap::from([
        ("bridge_estimate".to_string(), est.bridge.value),
        ("bridge_stderr".to_string(), est.bridge.stderr),
        ("bridge_relative_error".to_string(), rel),
        ("grid_estimate".to_string(), est.grid.value),
        ("grid_relative_error".to_string(), est.grid.relative_error(E_NEG_MIN_BROWNIAN)),
    ]);
    Ok(CriterionResult::new(2, vec![Check::at_most("relative_error", rel, 0.01)], metrics))
}

fn molchan_rate(s: &Sizes, seed: Seed) -> Result<CriterionResult> {
    let mut checks = Vec::new();
    let mut metrics = BTreeMap::new();
    for (k, h) in [0.5, 0.75].into_iter().enumerate() {
        let study = rate_study(
            hurst(h),
            &s.rate_horizons,
            s.steps_per_unit,
            s.rate_paths,
            seed.stage(4 * k as u64),
        )?;
        let slope_err = (study.fit.slope - (h - 1.0)).abs();
        checks.push(Check::at_most(key("slope_error", h), slope_err, 0.05));
        metrics.insert(key("slope", h), study.fit.slope);
        metrics.insert(key("slope_stderr", h), study.fit.slope_stderr);
        for row in &study.rows {
            metrics.insert(format!("i_hat_h{h}_t{}", row.horizon), row.i_hat.value);
            metrics.insert(format!("prefactor_h{h}_t{}", row.horizon), row.prefactor);
        }
        if h == 0.5 {
            let last = study.rows.last().expect("at least three horizons");
            let rel = (last.prefactor - E_NEG_MIN_BROWNIAN).abs() / E_NEG_MIN_BROWNIAN;
            checks.push(Check::at_most("prefactor_relative_error_h0.5", rel, 0.10));
        }
    }
    Ok(CriterionResult::new(3, checks, metrics))
}

/// `X(1)` marginal of the limit law with weights `B(1) − M(1)`.
fn limit_endpoint(h: f64, steps: usize, n: usize, seed: Seed) -> Result<WeightedSample> {
    let ens = sample_limit_law_with(hurst(h), steps, n, seed, DEFAULT_ESS_FLOOR, |p| p.last())?;
    ens.marginal(|x| *x)
}

fn penalized_limit(s: &Sizes, seed: Seed) -> Result<CriterionResult> {
    let mut checks = Vec::new();
    let mut metrics = BTreeMap::new();
    for (k, h) in [0.5, 0.75].into_iter().enumerate() {
        let stage = 8 * k as u64;
        let limit = limit_endpoint(h, s.limit_steps, s.limit_paths, seed.stage(stage))?;
        let mut trend = Vec::new();
        for (j, &t) in s.trend_horizons.iter().enumerate() {
            let n_steps = steps_for(t, s.steps_per_unit)?;
            let ens = sample_penalized_with(
                hurst(h),
                t,
                n_steps,
                s.penalized_paths,
                seed.stage(stage + 1 + j as u64),
                DEFAULT_ESS_FLOOR,
                |p| p.last(),
            )?;
            let pen = ens.marginal(|x| *x)?;
            let test = two_sample_test(
                &pen,
                &limit,
                crate::stats::TwoSampleStat::Ks,
                0.02,
                s.boot,
                seed.stage(stage + 5 + j as u64),
            )?;
            metrics.insert(format!("ks_h{h}_t{t}"), test.statistic);
            metrics.insert(format!("ks_ci_low_h{h}_t{t}"), test.ci_low);
            metrics.insert(format!("ks_ci_high_h{h}_t{t}"), test.ci_high);
            metrics.insert(format!("ess_h{h}_t{t}"), ens.ess);
            trend.push((t, test));
        }
        let (t_last, last) = trend.last().expect("at least one horizon");
        checks.push(Check::at_most(format!("ks_h{h}_t{t_last}"), last.statistic, 0.02));
        for w in trend.windows(2) {
            let (a, b) = (&w[0].1, &w[1].1);
            let noise = 0.5 * (a.ci_high - a.ci_low).max(b.ci_high - b.ci_low);
            checks.push(Check::at_most(
                format!("ks_increase_h{h}_t{}_to_t{}", w[0].0, w[1].0),
                b.statistic - a.statistic,
                noise,
            ));
        }
    }
    Ok(CriterionResult::new(4, checks, metrics))
}

fn asymmetry_sign(s: &Sizes, seed: Seed) -> Result<CriterionResult> {
    let mut checks = Vec::new();
    let mut metrics = BTreeMap::new();
    for (k, h) in [0.3, 0.5, 0.8].into_iter().enumerate() {
        let x1 = limit_endpoint(h, s.limit_steps, s.asym_paths, seed.stage(2 * k as u64))?;
        let rep = asymmetry(&x1, s.boot, 0.99, seed.stage(2 * k as u64 + 1))?;
        metrics.insert(key("difference", h), rep.difference);
        metrics.insert(key("p_positive", h), rep.p_positive);
        metrics.insert(key("p_negative", h), rep.p_negative);
        checks.push(Check::above(key("lower_bound_99", h), rep.lower_bound, 0.0));
    }
    Ok(CriterionResult::new(5, checks, metrics))
}

fn sde_law(s: &Sizes, seed: Seed) -> Result<CriterionResult> {
    let spec = DriftSpec::new(DriftKind::Penalized, 0.0)?;
    let euler = euler_endpoints(spec, s.euler_steps, s.euler_paths, seed.stage(0), false)?;
    let x1 = WeightedSample::uniform(euler.iter().map(|e| e.x1).collect())?;
    let gap = WeightedSample::uniform(euler.iter().map(|e| e.x1 - e.min).collect())?;
    let q = sample_limit_law_with(
        HurstParam::brownian(),
        s.euler_steps,
        s.euler_paths,
        seed.stage(1),
        DEFAULT_ESS_FLOOR,
        |p| (p.last(), p.last() - p.min()),
    )?;
    let ks_x1 = ks_distance(&x1, &q.marginal(|v| v.0)?);
    let ks_gap = ks_distance(&gap, &q.marginal(|v| v.1)?);
    let metrics = BTreeMap::from([
        ("ks_endpoint".to_string(), ks_x1),
        ("ks_gap".to_string(), ks_gap),
        ("q_ess".to_string(), q.ess),
    ]);
    let checks = vec![Check::at_most("ks_endpoint", ks_x1, 0.02), Check::at_most("ks_gap", ks_gap, 0.02)];
    Ok(CriterionResult::new(6, checks, metrics))
}

fn meander_bessel(s: &Sizes, seed: Seed) -> Result<CriterionResult> {
    let meander = DriftSpec::with_default_start(DriftKind::Meander, s.euler_steps);
    let me = euler_endpoints(meander, s.euler_steps, s.euler_paths, seed.stage(0), false)?;
    let me_x1 = WeightedSample::uniform(me.iter().map(|e| e.x1).collect())?;
    let ks_me = ks_against_cdf(&me_x1, |x| if x <= 0.0 { 0.0 } else { 1.0 - (-x * x / 2.0).exp() });

    let bessel = DriftSpec::new(DriftKind::Bessel, 0.0)?;
    let be = euler_endpoints(bessel, s.euler_steps, s.euler_paths, seed.stage(1), false)?;
    let be_x1 = WeightedSample::uniform(be.iter().map(|e| e.x1).collect())?;
    let exact = WeightedSample::uniform(sample_bessel_endpoint_exact(s.oracle_paths, seed.stage(2)))?;
    let ks_be = ks_distance(&be_x1, &exact);

    let rejections = |v: &[crate::sde::Endpoint]| v.iter().map(|e| e.rejections as f64).sum::<f64>();
    let metrics = BTreeMap::from([
        ("ks_meander_rayleigh".to_string(), ks_me),
        ("ks_bessel_exact".to_string(), ks_be),
        ("meander_step_rejections".to_string(), rejections(&me)),
        ("bessel_step_rejections".to_string(), rejections(&be)),
    ]);
    let checks = vec![
        Check::at_most("ks_meander_rayleigh", ks_me, 0.02),
        Check::at_most("ks_bessel_exact", ks_be, 0.02),
    ];
    Ok(CriterionResult::new(7, checks, metrics))
}

fn gauss_density(v: f64, u: f64) -> f64 {
    (-u * u / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
}

/// `(2Φ_v(x) − 1, ∫_x^∞ (1 − Φ_v(s)) ds, ∫_0^x e^{−y²/2v} dy)` by quadrature
/// of elementary integrands only.
pub fn drift_pieces_by_quadrature(t: f64, x: f64) -> (f64, f64, f64) {
    let v = 1.0 - t;
    let (abs, rel) = (1e-15, 1e-14);
    let centered = 2.0 * integrate(|u| gauss_density(v, u), 0.0, x, abs, rel).value;
    // ∫_x^∞ P(N > s) ds = E[(N − x)⁺]
    let tail = integrate_to_infinity(|u| (u - x) * gauss_density(v, u), x, abs, rel).value;
    let meander = integrate(|y| (-y * y / (2.0 * v)).exp(), 0.0, x, abs, rel).value;
    (centered, tail, meander)
}

fn drift_lattice(s: &Sizes) -> Result<CriterionResult> {
    let n = s.lattice;
    let ts: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let xs: Vec<f64> = (1..=n).map(|j| 5.0 * j as f64 / n as f64).collect();
    let errors = par_map_streams(Seed::new(0), ts.len(), || (), |_, i, _| {
        let t = ts[i];
        let mut worst = [0.0f64; 4];
        for &x in &xs {
            let (centered, tail, me_norm) = drift_pieces_by_quadrature(t, x);
            let v = 1.0 - t;
            let pen = centered / (x + 2.0 * tail);
            let me = (-x * x / (2.0 * v)).exp() / me_norm;
            let errs = [
                (tail_integral(t, x) - tail).abs(),
                (meander_normalizer(v, x) - me_norm).abs(),
                (drift_penalized(t, x) - pen).abs(),
                (drift_meander(t, x) - me).abs(),
            ];
            for (w, e) in worst.iter_mut().zip(errs) {
                *w = w.max(e);
            }
        }
        worst
    });
    let worst = errors.iter().fold([0.0f64; 4], |acc, e| {
        [acc[0].max(e[0]), acc[1].max(e[1]), acc[2].max(e[2]), acc[3].max(e[3])]
    });
    let mut checks = vec![
        Check::at_most("tail_integral_vs_quadrature", worst[0], 1e-10),
        Check::at_most("meander_denominator_vs_quadrature", worst[1], 1e-10),
        Check::at_most("penalized_drift_vs_quadrature", worst[2], 1e-10),
        Check::at_most("meander_drift_vs_quadrature", worst[3], 1e-10),
    ];

    let t100: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
    let near_zero = [0.0, 0.5, 0.9].iter().map(|&t| drift_penalized(t, 1e-6)).fold(0.0, f64::max);
    let near_zero_all_t = t100.iter().map(|&t| drift_penalized(t, 1e-6)).fold(0.0, f64::max);
    checks.push(Check::at_most("penalized_drift_at_1e-6", near_zero, 1e-5));
    let far = [0.0, 0.5, 0.9]
        .iter()
        .map(|&t| (50.0 * drift_penalized(t, 50.0) - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("x_times_drift_at_50_minus_1", far, 1e-2));
    let late = (drift_penalized(0.999, 1.0) - 1.0).abs();
    checks.push(Check::at_most("drift_at_t0.999_x1_minus_1", late, 1e-2));
    let monotone = xs.iter().all(|&x| {
        let pen: Vec<f64> = t100.iter().map(|&t| drift_penalized(t, x)).collect();
        let me: Vec<f64> = t100.iter().map(|&t| drift_meander(t, x)).collect();
        pen.windows(2).all(|w| w[1] >= w[0]) && me.windows(2).all(|w| w[1] <= w[0])
    });
    checks.push(Check::holds("monotone_in_time", monotone));

    let metrics = BTreeMap::from([
        ("max_error_tail_integral".to_string(), worst[0]),
        ("max_error_meander_denominator".to_string(), worst[1]),
        ("max_error_penalized_drift".to_string(), worst[2]),
        ("max_error_meander_drift".to_string(), worst[3]),
        ("penalized_drift_at_1e-6_max_over_t_grid".to_string(), near_zero_all_t),
    ]);
    Ok(CriterionResult::new(8, checks, metrics))
}

/// `B(1) − M(1)` for a Brownian motion started at `b` at time `t` with
/// running minimum `m`, sampled exactly through the bridge minimum.
fn forward_gap<R: Rng + ?Sized>(t: f64, b: f64, m: f64, rng: &mut R) -> f64 {
    let v = 1.0 - t;
    let b1 = b + v.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let u = 1.0 - rng.random::<f64>();
    b1 - m.min(brownian_bridge_min(b, b1, v, u))
}

fn proof_formulas(s: &Sizes, seed: Seed) -> Result<CriterionResult> {
    let mut checks = Vec::new();
    let mut metrics = BTreeMap::new();

    let rmse = |n_steps: usize, stage: u64| -> Result<f64> {
        let gen = FbmGenerator::new(HurstParam::brownian(), TimeGrid::unit(n_steps)?, Method::Auto)?;
        let sq = gen.map_paths(seed.stage(stage), s.residual_paths, |p: &Path, _| {
            shiryaev_residual(p, -E_NEG_MIN_BROWNIAN).powi(2)
        });
        Ok((sq.iter().sum::<f64>() / sq.len() as f64).sqrt())
    };
    let coarse = rmse(s.residual_steps.0, 0)?;
    let fine = rmse(s.residual_steps.1, 1)?;
    metrics.insert("residual_rmse_coarse".into(), coarse);
    metrics.insert("residual_rmse_fine".into(), fine);
    checks.push(Check::at_most("residual_rmse_fine_minus_coarse", fine - coarse, 0.0));

    for (k, (t, b, m)) in [(0.5, 0.3, -0.2), (0.2, 0.0, 0.0), (0.8, 1.0, -0.5)].into_iter().enumerate() {
        let gaps = par_map_streams(seed.stage(2 + k as u64), s.forward_paths, || (), |_, _, rng| {
            forward_gap(t, b, m, rng)
        });
        let mc = EstimateWithError::from_samples(&gaps);
        let formula = cond_expect_endpoint_gap(t, b, m)?;
        let z = (mc.value - formula).abs() / mc.stderr;
        let name = format!("cond_gap_z_t{t}_b{b}_m{m}");
        metrics.insert(name.clone(), z);
        checks.push(Check::at_most(name, z, 3.0));
    }

    let mut worst: f64 = 0.0;
    for i in 0..s.lattice {
        let t = i as f64 / s.lattice as f64;
        for j in 0..=s.lattice {
            let gap = 5.0 * j as f64 / s.lattice as f64;
            let lhs = density_process(t, gap) * drift_penalized(t, gap);
            worst = worst.max((lhs - martingale_integrand(t, gap)).abs());
        }
    }
    metrics.insert("max_error_density_drift_identity".into(), worst);
    checks.push(Check::at_most("density_drift_identity", worst, 1e-10));
    Ok(CriterionResult::new(9, checks, metrics))
}

/// Values of `path` on the sub-grid of `n_steps` steps, which must divide
/// the path's own step count.
fn subsample(path: &Path, n_steps: usize) -> Result<Path> {
    let stride = path.grid.n_steps() / n_steps.max(1);
    if stride == 0 || stride * n_steps != path.grid.n_steps() {
        return Err(crate::error::Error::param("n_steps", "must divide the path's step count"));
    }
    Path::new(
        TimeGrid::new(path.grid.horizon(), n_steps)?,
        path.values.iter().step_by(stride).copied().collect(),
    )
}

fn tightness(s: &Sizes, seed: Seed) -> Result<CriterionResult> {
    let (delta, eps) = (0.01, 0.5);
    let mut rows = Vec::new();
    let mut metrics = BTreeMap::new();
    for (k, &t) in s.trend_horizons.iter().enumerate() {
        let n_steps = steps_for(t, s.steps_per_unit)?;
        if n_steps % s.tight_grid != 0 {
            return Err(crate::error::Error::param("tight_grid", "must divide every grid size"));
        }
        let ens = sample_penalized_with(
            HurstParam::brownian(),
            t,
            n_steps,
            s.tight_paths,
            seed.stage(2 * k as u64),
            DEFAULT_ESS_FLOOR,
            |p| {
                let coarse = subsample(p, s.tight_grid).expect("divisibility checked above");
                let w = modulus_of_continuity(&coarse, delta).expect("delta is positive");
                if w >= eps { 1.0 } else { 0.0 }
            },
        )?;
        let indicator = ens.marginal(|x| *x)?;
        let p = indicator.mean();
        let ci = bootstrap_ci(&[&indicator], s.boot, 0.95, seed.stage(2 * k as u64 + 1), |r| r[0].mean())?;
        metrics.insert(format!("p_t{t}"), p);
        metrics.insert(format!("ci_half_width_t{t}"), ci.half_width());
        rows.push((t, p, ci.half_width()));
    }
    let checks = rows
        .windows(2)
        .map(|w| {
            let ((t0, p0, h0), (t1, p1, h1)) = (w[0], w[1]);
            Check::at_most(format!("increase_t{t0}_to_t{t1}"), p1 - p0, 2.0 * h0.max(h1))
        })
        .collect();
    Ok(CriterionResult::new(10, checks, metrics))
}
