//! The limit process `X_H`: fBM on `[0, 1]` under the change of measure
//! `dQ/dP = (B_H(1) − M_H(1)) / E[−M_H(1)]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{compensated_sum, EstimateWithError};
use crate::gaussgen::{brownian_bridge_min, FbmGenerator, HurstParam, Method, Path, TimeGrid};
use crate::penalize::{sample_weighted, WeightedEnsemble, DEFAULT_ESS_FLOOR};
use crate::rng::Seed;
use crate::sde::E_NEG_MIN_BROWNIAN;
use crate::stats::{bootstrap_replicates, quantile_sorted, WeightedSample};

/// The density `dQ/dP` of one path, kept as numerator and normalizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QWeight {
    /// `B_H(1) − M_H(1)`.
    pub raw: f64,
    /// `E[−M_H(1)]`, closed form or estimate.
    pub normalizer: f64,
}

impl QWeight {
    pub fn density(&self) -> f64 {
        self.raw / self.normalizer
    }
}

/// `B(1) − min B` on the path's grid; never negative.
pub fn limit_weight(path: &Path) -> f64 {
    path.last() - path.min()
}

fn unit_generator(hurst: HurstParam, n_steps: usize) -> Result<FbmGenerator> {
    FbmGenerator::new(hurst, TimeGrid::unit(n_steps)?, Method::Auto)
}

/// fBM paths on `[0, 1]` weighted by [`limit_weight`].
pub fn sample_limit_law(
    hurst: HurstParam,
    n_steps: usize,
    n_paths: usize,
    seed: Seed,
) -> Result<WeightedEnsemble> {
    sample_limit_law_with(hurst, n_steps, n_paths, seed, DEFAULT_ESS_FLOOR, |p| p.clone())
}

/// Like [`sample_limit_law`], keeping `observe(path)` per path.
pub fn sample_limit_law_with<T, O>(
    hurst: HurstParam,
    n_steps: usize,
    n_paths: usize,
    seed: Seed,
    ess_floor: f64,
    observe: O,
) -> Result<WeightedEnsemble<T>>
where
    T: Send,
    O: Fn(&Path) -> T + Sync + Send,
{
    let gen = unit_generator(hurst, n_steps)?;
    sample_weighted(&gen, seed, n_paths, Some(ess_floor), limit_weight, observe)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizerEstimate {
    /// `E[−M_H(1)]` from grid minima.
    pub neg_min: EstimateWithError,
    /// `E[S_H(1)]` from grid maxima of the same paths.
    pub max: EstimateWithError,
    /// `E[B_H(1) − M_H(1)]` from the same paths.
    pub endpoint_gap: EstimateWithError,
    /// Standard error of the paired difference `−min − max`.
    pub joint_stderr: f64,
    /// `|Ê[−min] − Ê[max]| ≤ 3 · joint_stderr`.
    pub symmetric: bool,
}

/// Monte Carlo `E[−M_H(1)]` over grid minima, with the mirror estimate of
/// `E[S_H(1)]` as a symmetry check.
pub fn normalizer_e_neg_min(
    hurst: HurstParam,
    n_steps: usize,
    n_paths: usize,
    seed: Seed,
) -> Result<NormalizerEstimate> {
    if n_paths < 2 {
        return Err(Error::param("n_paths", "at least two paths are needed for a standard error"));
    }
    let gen = unit_generator(hurst, n_steps)?;
    let stats = gen.map_paths(seed, n_paths, |p, _| (-p.min(), p.max(), p.last()));
    let neg_min: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let max: Vec<f64> = stats.iter().map(|s| s.1).collect();
    let gap: Vec<f64> = stats.iter().map(|s| s.2 + s.0).collect();
    let diff: Vec<f64> = stats.iter().map(|s| s.0 - s.1).collect();
    let diff = EstimateWithError::from_samples(&diff);
    Ok(NormalizerEstimate {
        neg_min: EstimateWithError::from_samples(&neg_min),
        max: EstimateWithError::from_samples(&max),
        endpoint_gap: EstimateWithError::from_samples(&gap),
        joint_stderr: diff.stderr,
        symmetric: diff.value.abs() <= 3.0 * diff.stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeNormalizer {
    /// From the exact minimum of the Brownian bridge on each grid step.
    pub bridge: EstimateWithError,
    /// From the grid minimum of the same paths.
    pub grid: EstimateWithError,
}

/// `E[−M(1)]` for Brownian motion using the exact minimum of each
/// Brownian-bridge segment between grid points instead of the grid minimum.
pub fn normalizer_brownian_bridge(
    n_steps: usize,
    n_paths: usize,
    seed: Seed,
) -> Result<BridgeNormalizer> {
    if n_paths < 2 {
        return Err(Error::param("n_paths", "at least two paths are needed for a standard error"));
    }
    let gen = unit_generator(HurstParam::brownian(), n_steps)?;
    let dt = gen.grid().dt();
    let mins = gen.map_paths(seed, n_paths, |p, rng| {
        let low = p.values.windows(2).fold(0.0f64, |low, w| {
            low.min(brownian_bridge_min(w[0], w[1], dt, open_uniform(rng)))
        });
        (-low, -p.min())
    });
    let bridge: Vec<f64> = mins.iter().map(|m| m.0).collect();
    let grid: Vec<f64> = mins.iter().map(|m| m.1).collect();
    Ok(BridgeNormalizer {
        bridge: EstimateWithError::from_samples(&bridge),
        grid: EstimateWithError::from_samples(&grid),
    })
}

/// Value of `E[−M_H(1)]` used to normalize `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Normalizer {
    /// `√(2/π)` at `H = 1/2`.
    Closed { value: f64 },
    Estimated { estimate: EstimateWithError },
}

impl Normalizer {
    pub fn value(&self) -> f64 {
        match self {
            Normalizer::Closed { value } => *value,
            Normalizer::Estimated { estimate } => estimate.value,
        }
    }

    pub fn stderr(&self) -> f64 {
        match self {
            Normalizer::Closed { .. } => 0.0,
            Normalizer::Estimated { estimate } => estimate.stderr,
        }
    }
}

/// Closed form for Brownian motion, grid-minimum Monte Carlo otherwise.
pub fn normalizer_policy(
    hurst: HurstParam,
    n_steps: usize,
    n_paths: usize,
    seed: Seed,
) -> Result<Normalizer> {
    if hurst.is_brownian() {
        return Ok(Normalizer::Closed {
            value: E_NEG_MIN_BROWNIAN,
        });
    }
    let estimate = normalizer_e_neg_min(hurst, n_steps, n_paths, seed)?.neg_min;
    Ok(Normalizer::Estimated { estimate })
}

/// `∫_0^1 f e^{rf} / ∫_0^1 e^{rf}` by the trapezoid rule on equally spaced
/// samples of `f`, with `e^{r max f}` factored out.
pub fn laplace_ratio(f: &[f64], r: f64) -> Result<f64> {
    if f.len() < 2 {
        return Err(Error::param("f", "need at least two samples"));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("f", "samples must be finite"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::param("r", format!("must be positive, got {r}")));
    }
    let top = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let last = f.len() - 1;
    let trapezoid = |i: usize| if i == 0 || i == last { 0.5 } else { 1.0 };
    let w: Vec<f64> = f
        .iter()
        .enumerate()
        .map(|(i, v)| trapezoid(i) * (r * (v - top)).exp())
        .collect();
    let num = compensated_sum(f.iter().zip(&w).map(|(v, w)| v * w));
    let den = compensated_sum(w.iter().copied());
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryReport {
    pub p_positive: f64,
    pub p_negative: f64,
    /// `p_positive − p_negative`.
    pub difference: f64,
    /// Standard deviation of the bootstrap replicates.
    pub boot_stderr: f64,
    /// One-sided lower bootstrap bound at `level`.
    pub lower_bound: f64,
    pub level: f64,
    pub n_boot: usize,
    pub positive: bool,
}

fn sign_difference(s: &WeightedSample) -> f64 {
    s.probability(|x| x > 0.0) - s.probability(|x| x < 0.0)
}

/// Weighted `P(X > 0) − P(X < 0)` with a one-sided percentile-bootstrap bound.
pub fn asymmetry(
    endpoint: &WeightedSample,
    n_boot: usize,
    level: f64,
    seed: Seed,
) -> Result<AsymmetryReport> {
    if n_boot == 0 {
        return Err(Error::param("n_boot", "must be positive"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", format!("must lie in (0, 1), got {level}")));
    }
    let mut reps = bootstrap_replicates(&[endpoint], n_boot, seed, |s| sign_difference(&s[0]));
    reps.sort_by(f64::total_cmp);
    let boot_stderr = EstimateWithError::from_samples(&reps).stderr * (reps.len() as f64).sqrt();
    let lower_bound = quantile_sorted(&reps, 1.0 - level);
    let p_positive = endpoint.probability(|x| x > 0.0);
    let p_negative = endpoint.probability(|x| x < 0.0);
    Ok(AsymmetryReport {
        p_positive,
        p_negative,
        difference: p_positive - p_negative,
        boot_stderr,
        lower_bound,
        level,
        n_boot,
        positive: lower_bound > 0.0,
    })
}

/// Draw a uniform on `(0, 1]`, safe for `ln`.
fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn limit_weight_examples() {
        let g = TimeGrid::unit(2).unwrap();
        assert_eq!(limit_weight(&Path::new(g, vec![0.0, -0.5, 1.0]).unwrap()), 1.5);
        assert_eq!(limit_weight(&Path::new(g, vec![0.0, 0.3, 0.7]).unwrap()), 0.7);
        let q = QWeight { raw: 1.5, normalizer: 0.75 };
        assert_eq!(q.density(), 2.0);
    }

    #[test]
    fn laplace_examples() {
        assert_eq!(laplace_ratio(&[2.5; 17], 1e3).unwrap(), 2.5);
        let n = 20_000;
        let line: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        assert_abs_diff_eq!(laplace_ratio(&line, 100.0).unwrap(), 0.99, epsilon = 1e-3);
        let sine: Vec<f64> = line.iter().map(|t| (std::f64::consts::PI * t).sin()).collect();
        assert_abs_diff_eq!(laplace_ratio(&sine, 1000.0).unwrap(), 1.0, epsilon = 1e-2);
        assert!(laplace_ratio(&[1.0], 1.0).is_err());
        assert!(laplace_ratio(&[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn laplace_ratio_rises_to_max() {
        let f: Vec<f64> = (0..=200).map(|i| ((i as f64) * 0.05).sin() * (i as f64 / 200.0)).collect();
        let top = f.iter().copied().fold(f64::MIN, f64::max);
        let rs: Vec<f64> = (0..40).map(|k| 10f64.powf(k as f64 / 8.0)).collect();
        let vals: Vec<f64> = rs.iter().map(|&r| laplace_ratio(&f, r).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert_abs_diff_eq!(*vals.last().unwrap(), top, epsilon = 1e-6);
    }

    #[test]
    fn normalizer_policy_closed_form_at_half() {
        let n = normalizer_policy(HurstParam::brownian(), 16, 10, Seed::new(1)).unwrap();
        assert_eq!(n.value(), E_NEG_MIN_BROWNIAN);
        assert_eq!(n.stderr(), 0.0);
        let n = normalizer_policy(HurstParam::new(0.7).unwrap(), 64, 2000, Seed::new(1)).unwrap();
        assert!(matches!(n, Normalizer::Estimated { .. }) && n.stderr() > 0.0);
    }

    #[test]
    fn bridge_minimum_removes_grid_bias() {
        // Coarse grid: the grid minimum is visibly biased, the bridge one is not.
        let est = normalizer_brownian_bridge(16, 40_000, Seed::new(6)).unwrap();
        assert!(est.grid.value < E_NEG_MIN_BROWNIAN - 5.0 * est.grid.stderr);
        assert!(est.bridge.within_sigma(E_NEG_MIN_BROWNIAN, 4.0), "{est:?}");
        let plain = normalizer_e_neg_min(HurstParam::brownian(), 16, 40_000, Seed::new(6)).unwrap();
        assert_eq!(plain.neg_min, est.grid);
    }

    #[test]
    fn self_normalized_mass_is_one() {
        let ens = sample_limit_law(HurstParam::new(0.4).unwrap(), 64, 2000, Seed::new(3)).unwrap();
        assert_abs_diff_eq!(ens.expectation(|_| 1.0), 1.0, epsilon = 1e-14);
        // On a grid the endpoint is the minimum with small positive probability.
        assert!(ens.weights.iter().all(|w| *w >= 0.0));
        assert!(ens.probability(|p| limit_weight(p) > 0.0) == 1.0);
        assert!(ens.probability(|p| p.last() < 0.0) > 0.0);
    }

    #[test]
    fn asymmetry_detects_a_shift() {
        let vals: Vec<f64> = (0..2000).map(|i| (i as f64 / 2000.0) - 0.3).collect();
        let s = WeightedSample::uniform(vals).unwrap();
        let rep = asymmetry(&s, 200, 0.99, Seed::new(4)).unwrap();
        assert_abs_diff_eq!(rep.difference, 0.4, epsilon = 1e-3);
        assert!(rep.positive && rep.lower_bound < rep.difference);
    }
}
