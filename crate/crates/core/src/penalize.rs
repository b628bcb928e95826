//! Penalization of fBM for being negative.
//!
//! A path on `[0, T]` receives weight `(∫_0^T exp(−B_H(s)) ds)^{-1}`; the
//! mean weight is `I(T)`, which decays like `H T^{H−1} E[S_H(1)]`. Reweighting
//! the rescaled paths `T^{−H} B_H(T ·)` by these weights gives the law of the
//! penalized process `X_{H,T}` on `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{compensated_sum, ess, EstimateWithError};
use crate::gaussgen::{rescale, FbmGenerator, HurstParam, Method, Path, TimeGrid};
use crate::rng::Seed;
use crate::stats::WeightedSample;

pub const DEFAULT_ESS_FLOOR: f64 = 100.0;
pub const DEFAULT_STEPS_PER_UNIT: usize = 64;

/// Paths (or per-path observations) with self-normalized importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnsemble<T = Path> {
    pub paths: Vec<T>,
    pub weights: Vec<f64>,
    /// `Σ weights`.
    pub normalizer: f64,
    pub ess: f64,
}

impl<T> WeightedEnsemble<T> {
    /// Validate weights and enforce `ess ≥ ess_floor` when a floor is given.
    pub fn new(paths: Vec<T>, weights: Vec<f64>, ess_floor: Option<f64>) -> Result<Self> {
        if paths.len() != weights.len() {
            return Err(Error::param("weights", "one weight per path is required"));
        }
        if paths.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(index) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::NonfiniteWeight { index });
        }
        let normalizer = compensated_sum(weights.iter().copied());
        if normalizer <= 0.0 {
            return Err(Error::DegenerateWeights { ess: 0.0, floor: ess_floor.unwrap_or(0.0) });
        }
        let ess = ess(&weights);
        if let Some(floor) = ess_floor {
            if ess < floor {
                return Err(Error::DegenerateWeights { ess, floor });
            }
        }
        Ok(WeightedEnsemble {
            paths,
            weights,
            normalizer,
            ess,
        })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Self-normalized `Σ w f / Σ w`.
    pub fn expectation(&self, f: impl Fn(&T) -> f64) -> f64 {
        compensated_sum(self.paths.iter().zip(&self.weights).map(|(p, w)| w * f(p)))
            / self.normalizer
    }

    pub fn probability(&self, pred: impl Fn(&T) -> bool) -> f64 {
        self.expectation(|p| pred(p) as u8 as f64)
    }

    /// Weighted law of a scalar functional.
    pub fn marginal(&self, f: impl Fn(&T) -> f64) -> Result<WeightedSample> {
        WeightedSample::new(self.paths.iter().map(f).collect(), self.weights.clone())
    }

    pub fn map<U>(self, f: impl Fn(T) -> U) -> WeightedEnsemble<U> {
        WeightedEnsemble {
            paths: self.paths.into_iter().map(f).collect(),
            weights: self.weights,
            normalizer: self.normalizer,
            ess: self.ess,
        }
    }
}

/// `log` of the penalization weight, with the trapezoid integral evaluated
/// after factoring out `exp(−min)`.
pub fn log_weight_penalized(path: &Path) -> f64 {
    let v = &path.values;
    let low = path.min();
    let n = v.len() - 1;
    let interior = compensated_sum(v[1..n].iter().map(|x| (low - x).exp()));
    let ends = 0.5 * ((low - v[0]).exp() + (low - v[n]).exp());
    low - (path.grid.dt() * (interior + ends)).ln()
}

/// `(∫_0^T exp(−B(s)) ds)^{-1}` by the trapezoid rule on the path's grid.
pub fn weight_penalized(path: &Path) -> f64 {
    log_weight_penalized(path).exp()
}

fn generator(hurst: HurstParam, horizon: f64, n_steps: usize) -> Result<FbmGenerator> {
    FbmGenerator::new(hurst, TimeGrid::new(horizon, n_steps)?, Method::Auto)
}

/// Monte Carlo estimate of `I(T) = E[(∫_0^T exp(−B_H)) ^{-1}]`.
pub fn estimate_i(
    hurst: HurstParam,
    horizon: f64,
    n_steps: usize,
    n_paths: usize,
    seed: Seed,
) -> Result<EstimateWithError> {
    if n_paths < 2 {
        return Err(Error::param("n_paths", "at least two paths are needed for a standard error"));
    }
    let gen = generator(hurst, horizon, n_steps)?;
    let w = gen.map_paths(seed, n_paths, |p, _| weight_penalized(p));
    Ok(EstimateWithError::from_samples(&w))
}

/// Draw fBM paths, weight each with `weight`, and keep `observe(path)`.
pub fn sample_weighted<T, W, O>(
    gen: &FbmGenerator,
    seed: Seed,
    n_paths: usize,
    ess_floor: Option<f64>,
    weight: W,
    observe: O,
) -> Result<WeightedEnsemble<T>>
where
    T: Send,
    W: Fn(&Path) -> f64 + Sync + Send,
    O: Fn(&Path) -> T + Sync + Send,
{
    let pairs = gen.map_paths(seed, n_paths, |p, _| (weight(p), observe(p)));
    let (weights, paths): (Vec<f64>, Vec<T>) = pairs.into_iter().unzip();
    WeightedEnsemble::new(paths, weights, ess_floor)
}

/// Ensemble of `X_{H,T}`: rescaled paths with penalization weights.
pub fn sample_penalized(
    hurst: HurstParam,
    horizon: f64,
    n_steps: usize,
    n_paths: usize,
    seed: Seed,
) -> Result<WeightedEnsemble> {
    sample_penalized_with(hurst, horizon, n_steps, n_paths, seed, DEFAULT_ESS_FLOOR, |p| p.clone())
}

/// Like [`sample_penalized`], keeping `observe(rescaled path)` per path.
pub fn sample_penalized_with<T, O>(
    hurst: HurstParam,
    horizon: f64,
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
    let gen = generator(hurst, horizon, n_steps)?;
    sample_weighted(&gen, seed, n_paths, Some(ess_floor), weight_penalized, |p| {
        observe(&rescale(p, horizon, hurst))
    })
}

#[derive(Debug, Clone)]
pub struct RejectionOutcome {
    /// Accepted paths rescaled to `[0, 1]`, unit weights.
    pub ensemble: WeightedEnsemble,
    pub draws: usize,
    pub acceptance: EstimateWithError,
}

const REJECTION_BATCH: usize = 4096;

/// Keep fBM paths on `[0, T]` whose grid minimum is at least `−1`, rescaled
/// to `[0, 1]`. Paths are tried in stream order, so the accepted set does not
/// depend on the thread count.
pub fn sample_conditioned_rejection(
    hurst: HurstParam,
    horizon: f64,
    n_steps: usize,
    n_paths_target: usize,
    max_draws: usize,
    seed: Seed,
) -> Result<RejectionOutcome> {
    let gen = generator(hurst, horizon, n_steps)?;
    let mut accepted = Vec::with_capacity(n_paths_target);
    let mut draws = 0;
    while accepted.len() < n_paths_target && draws < max_draws {
        let batch = REJECTION_BATCH.min(max_draws - draws);
        let results = gen.map_paths(seed.child(draws as u64), batch, |p, _| {
            (p.min() >= -1.0).then(|| rescale(p, horizon, hurst))
        });
        for r in results {
            draws += 1;
            if let Some(p) = r {
                accepted.push(p);
                if accepted.len() == n_paths_target {
                    break;
                }
            }
        }
    }
    if accepted.len() < n_paths_target || accepted.is_empty() {
        return Err(Error::BudgetExhausted {
            accepted: accepted.len(),
            target: n_paths_target,
            draws,
        });
    }
    let acceptance = EstimateWithError::proportion(accepted.len(), draws);
    let weights = vec![1.0; accepted.len()];
    Ok(RejectionOutcome {
        ensemble: WeightedEnsemble::new(accepted, weights, None)?,
        draws,
        acceptance,
    })
}

/// Least-squares power law `log y = a + slope · log T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `(T, log estimate)` pairs.
    pub exponents: Vec<(f64, f64)>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::param("points", "a rate fit needs at least three horizons"));
    }
    if points.iter().any(|(t, y)| !(*t > 0.0 && *y > 0.0)) {
        return Err(Error::param("points", "horizons and estimates must be positive"));
    }
    let xs: Vec<f64> = points.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RateFit {
        exponents: points.iter().map(|(t, y)| (*t, y.ln())).collect(),
        slope,
        slope_stderr: (ssr / (n - 2.0) / sxx).sqrt(),
        intercept,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonRow {
    pub horizon: f64,
    pub n_steps: usize,
    pub i_hat: EstimateWithError,
    /// Effective sample size of the penalization weights.
    pub ess: f64,
    /// Self-normalized weighted mean of `X_{H,T}(1)`.
    pub x1_mean: EstimateWithError,
    /// `Î(T) T^{1−H} / H`, which tends to `E[S_H(1)]`.
    pub prefactor: f64,
    /// Fraction of paths with grid minimum `≥ −1` on `[0, T]`.
    pub persistence: EstimateWithError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    pub hurst: f64,
    pub rows: Vec<HorizonRow>,
    /// Power law of `Î(T)`.
    pub fit: RateFit,
    /// Power law of the persistence probability; absent when a horizon had
    /// no survivors.
    pub persistence_fit: Option<RateFit>,
}

/// Estimate `I(T)` and the persistence probability over several horizons
/// (grid size proportional to `T`) and fit the decay exponent of `I`.
/// Horizon `k` draws from stage `k` of `seed`.
pub fn rate_study(
    hurst: HurstParam,
    horizons: &[f64],
    steps_per_unit: usize,
    n_paths: usize,
    seed: Seed,
) -> Result<RateStudy> {
    let mut rows = Vec::with_capacity(horizons.len());
    for (k, &horizon) in horizons.iter().enumerate() {
        let n_steps = steps_for(horizon, steps_per_unit)?;
        let gen = generator(hurst, horizon, n_steps)?;
        let h = hurst.value();
        let scale = horizon.powf(-h);
        let per_path = gen.map_paths(seed.stage(k as u64), n_paths, |p, _| {
            (weight_penalized(p), p.min() >= -1.0, p.last() * scale)
        });
        let w: Vec<f64> = per_path.iter().map(|r| r.0).collect();
        let x1: Vec<f64> = per_path.iter().map(|r| r.2).collect();
        let survivors = per_path.iter().filter(|r| r.1).count();
        let i_hat = EstimateWithError::from_samples(&w);
        rows.push(HorizonRow {
            horizon,
            n_steps,
            i_hat,
            ess: ess(&w),
            x1_mean: self_normalized_mean(&x1, &w),
            prefactor: i_hat.value * horizon.powf(1.0 - h) / h,
            persistence: EstimateWithError::proportion(survivors, n_paths),
        });
    }
    let fit = fit_rate(&rows.iter().map(|r| (r.horizon, r.i_hat.value)).collect::<Vec<_>>())?;
    let survival: Vec<(f64, f64)> = rows.iter().map(|r| (r.horizon, r.persistence.value)).collect();
    let persistence_fit = if survival.iter().all(|(_, p)| *p > 0.0) {
        Some(fit_rate(&survival)?)
    } else {
        None
    };
    Ok(RateStudy {
        hurst: hurst.value(),
        rows,
        fit,
        persistence_fit,
    })
}

/// `Σ w x / Σ w` with the delta-method standard error
/// `√(Σ w² (x − μ)²) / Σ w`.
pub fn self_normalized_mean(values: &[f64], weights: &[f64]) -> EstimateWithError {
    let total = compensated_sum(weights.iter().copied());
    let mean = compensated_sum(values.iter().zip(weights).map(|(x, w)| w * x)) / total;
    let spread = compensated_sum(values.iter().zip(weights).map(|(x, w)| (w * (x - mean)).powi(2)));
    EstimateWithError {
        value: mean,
        stderr: spread.sqrt() / total,
        count: values.len(),
    }
}

/// Grid size for horizon `T` at a fixed resolution per unit time.
pub fn steps_for(horizon: f64, steps_per_unit: usize) -> Result<usize> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param("horizon", format!("must be positive, got {horizon}")));
    }
    Ok(((horizon * steps_per_unit as f64).round() as usize).max(1))
}
