//! Weighted one-dimensional sample statistics.
//!
//! All two-sample comparisons in this crate go through [`WeightedSample`]:
//! values are sorted once on construction and weights normalized to one, so
//! ECDF queries, KS and Wasserstein distances are linear merges.

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::estimate::{compensated_sum, ess as ess_of};
use crate::gaussgen::Path;
use crate::rng::Seed;

pub const DEFAULT_BOOTSTRAP: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    values: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightedSample {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::param(
                "weights",
                format!("{} weights for {} values", weights.len(), values.len()),
            ));
        }
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(index) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::NonfiniteWeight { index });
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::DomainViolation(format!("sample value {i} is NaN")));
        }
        let total = compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::param("weights", "total weight must be positive"));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        let weights: Vec<f64> = order.iter().map(|&i| weights[i] / total).collect();
        Ok(Self::from_sorted(values, weights))
    }

    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        WeightedSample::new(values, vec![1.0; n])
    }

    fn from_sorted(values: Vec<f64>, weights: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        WeightedSample {
            values,
            weights,
            cumulative,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Normalized weights aligned with [`values`](Self::values).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ess(&self) -> f64 {
        ess_of(&self.weights)
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.values.iter().zip(&self.weights).map(|(v, w)| v * w))
    }

    /// Weighted probability of `pred(value)`.
    pub fn probability(&self, pred: impl Fn(f64) -> bool) -> f64 {
        compensated_sum(
            self.values
                .iter()
                .zip(&self.weights)
                .filter(|(v, _)| pred(**v))
                .map(|(_, w)| *w),
        )
    }

    pub fn ecdf(&self) -> Ecdf<'_> {
        Ecdf { sample: self }
    }

    /// Draw `len()` indices with probability proportional to the weights and
    /// return the resample with count weights.
    pub fn resample<R: Rng + ?Sized>(&self, alias: &WeightedAliasIndex<f64>, rng: &mut R) -> Self {
        let n = self.len();
        let mut counts = vec![0u32; n];
        for _ in 0..n {
            counts[alias.sample(rng)] += 1;
        }
        let weights = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Self::from_sorted(self.values.clone(), weights)
    }

    fn alias(&self) -> WeightedAliasIndex<f64> {
        WeightedAliasIndex::new(self.weights.clone()).expect("weights validated on construction")
    }
}

/// Right-continuous weighted empirical distribution function.
#[derive(Debug, Clone, Copy)]
pub struct Ecdf<'a> {
    sample: &'a WeightedSample,
}

impl Ecdf<'_> {
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.sample.values.partition_point(|v| *v <= x);
        if k == 0 {
            0.0
        } else {
            self.sample.cumulative[k - 1]
        }
    }
}

pub fn weighted_ecdf(sample: &WeightedSample) -> Ecdf<'_> {
    sample.ecdf()
}

/// Walk the pooled jump points of two samples in increasing order, calling
/// `visit(x, next_x, F_a(x), F_b(x))` once per distinct point.
fn merge_walk(a: &WeightedSample, b: &WeightedSample, mut visit: impl FnMut(f64, f64, f64, f64)) {
    let (va, vb) = (&a.values, &b.values);
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0, 0.0);
    while i < va.len() || j < vb.len() {
        let x = match (va.get(i), vb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < va.len() && va[i] <= x {
            fa = a.cumulative[i];
            i += 1;
        }
        while j < vb.len() && vb[j] <= x {
            fb = b.cumulative[j];
            j += 1;
        }
        let next = match (va.get(i), vb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => x,
        };
        visit(x, next, fa, fb);
    }
}

/// Two-sample Kolmogorov–Smirnov distance between weighted ECDFs.
pub fn ks_distance(a: &WeightedSample, b: &WeightedSample) -> f64 {
    let mut d: f64 = 0.0;
    merge_walk(a, b, |_, _, fa, fb| d = d.max((fa - fb).abs()));
    d.min(1.0)
}

/// Sup distance between a weighted ECDF and a continuous cdf, checking both
/// one-sided limits at every jump.
pub fn ks_against_cdf(a: &WeightedSample, cdf: impl Fn(f64) -> f64) -> f64 {
    let mut d: f64 = 0.0;
    let mut before = 0.0;
    let mut k = 0;
    let n = a.values.len();
    while k < n {
        let x = a.values[k];
        while k < n && a.values[k] == x {
            k += 1;
        }
        let after = a.cumulative[k - 1];
        let c = cdf(x);
        d = d.max((after - c).abs()).max((before - c).abs());
        before = after;
    }
    d
}

/// `∫ |F_a − F_b| dx`.
pub fn wasserstein1(a: &WeightedSample, b: &WeightedSample) -> f64 {
    let mut terms = Vec::with_capacity(a.len() + b.len());
    merge_walk(a, b, |x, next, fa, fb| terms.push((fa - fb).abs() * (next - x)));
    compensated_sum(terms)
}

pub fn ess(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(index) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::NonfiniteWeight { index });
    }
    Ok(ess_of(weights))
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub n_boot: usize,
}

impl ConfidenceInterval {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.high - self.low)
    }
}

/// Weighted bootstrap replicates of `statistic`.
///
/// Each replicate resamples every input independently, proportionally to its
/// weights, with replicate `r` drawing from stream `seed.child(r)`.
pub fn bootstrap_replicates<F>(
    samples: &[&WeightedSample],
    n_boot: usize,
    seed: Seed,
    statistic: F,
) -> Vec<f64>
where
    F: Fn(&[WeightedSample]) -> f64 + Sync + Send,
{
    let aliases: Vec<_> = samples.iter().map(|s| s.alias()).collect();
    (0..n_boot)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.child(r as u64).rng();
            let resampled: Vec<WeightedSample> = samples
                .iter()
                .zip(&aliases)
                .map(|(s, alias)| s.resample(alias, &mut rng))
                .collect();
            statistic(&resampled)
        })
        .collect()
}

/// Percentile bootstrap interval at confidence `level`.
pub fn bootstrap_ci<F>(
    samples: &[&WeightedSample],
    n_boot: usize,
    level: f64,
    seed: Seed,
    statistic: F,
) -> Result<ConfidenceInterval>
where
    F: Fn(&[WeightedSample]) -> f64 + Sync + Send,
{
    if n_boot == 0 {
        return Err(Error::param("n_boot", "must be positive"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", format!("must lie in (0, 1), got {level}")));
    }
    let mut reps = bootstrap_replicates(samples, n_boot, seed, statistic);
    reps.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    Ok(ConfidenceInterval {
        low: quantile_sorted(&reps, alpha / 2.0),
        high: quantile_sorted(&reps, 1.0 - alpha / 2.0),
        level,
        n_boot,
    })
}

/// Outcome of a one-sided threshold test: `pass ⇔ statistic ≤ threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub threshold: f64,
    pub n_boot: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    pub pass: bool,
}

impl TestReport {
    pub fn new(statistic: f64, threshold: f64, ci: ConfidenceInterval) -> Self {
        TestReport {
            statistic,
            threshold,
            n_boot: ci.n_boot,
            ci_low: ci.low,
            ci_high: ci.high,
            pass: statistic <= threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TwoSampleStat {
    Ks,
    W1,
}

impl TwoSampleStat {
    pub fn eval(self, a: &WeightedSample, b: &WeightedSample) -> f64 {
        match self {
            TwoSampleStat::Ks => ks_distance(a, b),
            TwoSampleStat::W1 => wasserstein1(a, b),
        }
    }
}

/// Two-sample distance with a 95% weighted-bootstrap interval.
pub fn two_sample_test(
    a: &WeightedSample,
    b: &WeightedSample,
    stat: TwoSampleStat,
    threshold: f64,
    n_boot: usize,
    seed: Seed,
) -> Result<TestReport> {
    let statistic = stat.eval(a, b);
    let ci = bootstrap_ci(&[a, b], n_boot, 0.95, seed, |s| stat.eval(&s[0], &s[1]))?;
    Ok(TestReport::new(statistic, threshold, ci))
}

/// `sup |f(t_i) − f(t_j)|` over grid pairs with `|t_i − t_j| < delta`.
pub fn modulus_of_continuity(path: &Path, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", format!("must be positive, got {delta}")));
    }
    let ratio = delta / path.grid.dt();
    let span = ((ratio - 1e-9).ceil() as usize).saturating_sub(1);
    Ok(max_window_range(&path.values, span))
}

/// Largest `max − min` over all index windows `[i, i + span]`.
fn max_window_range(values: &[f64], span: usize) -> f64 {
    if span == 0 || values.len() < 2 {
        return 0.0;
    }
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut best: f64 = 0.0;
    for (k, &v) in values.iter().enumerate() {
        while maxq.back().is_some_and(|&i| values[i] <= v) {
            maxq.pop_back();
        }
        maxq.push_back(k);
        while minq.back().is_some_and(|&i| values[i] >= v) {
            minq.pop_back();
        }
        minq.push_back(k);
        let start = k.saturating_sub(span);
        while maxq.front().is_some_and(|&i| i < start) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&i| i < start) {
            minq.pop_front();
        }
        best = best.max(values[maxq[0]] - values[minq[0]]);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussgen::TimeGrid;
    use proptest::prelude::*;
    use rand_distr::StandardNormal;

    fn brute_window_range(values: &[f64], span: usize) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..values.len() {
            for j in i..values.len().min(i + span + 1) {
                best = best.max((values[i] - values[j]).abs());
            }
        }
        best
    }

    #[test]
    fn ecdf_single_point() {
        let s = WeightedSample::new(vec![2.0], vec![1.0]).unwrap();
        let f = weighted_ecdf(&s);
        assert_eq!(f.eval(1.999), 0.0);
        assert_eq!(f.eval(2.0), 1.0);
        assert_eq!(f.eval(f64::INFINITY), 1.0);
    }

    #[test]
    fn ecdf_uniform_weights_is_classical() {
        let s = WeightedSample::uniform(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        let f = s.ecdf();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(1.0), 0.25);
        assert_eq!(f.eval(2.0), 0.75);
        assert_eq!(f.eval(2.5), 0.75);
        assert_eq!(f.eval(3.0), 1.0);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(WeightedSample::uniform(vec![]), Err(Error::EmptySample)));
        assert!(matches!(
            WeightedSample::new(vec![1.0, 2.0], vec![1.0, f64::NAN]),
            Err(Error::NonfiniteWeight { index: 1 })
        ));
        assert!(matches!(
            WeightedSample::new(vec![1.0], vec![-1.0]),
            Err(Error::NonfiniteWeight { index: 0 })
        ));
        assert!(ess(&[]).is_err());
    }

    #[test]
    fn ks_examples() {
        let a = WeightedSample::uniform(vec![0.0]).unwrap();
        let b = WeightedSample::uniform(vec![1.0]).unwrap();
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert_eq!(ks_distance(&a, &b), 1.0);
        assert_eq!(wasserstein1(&a, &b), 1.0);
        assert_eq!(ess(&[1.0; 7]).unwrap(), 7.0);
        assert_eq!(ess(&[0.0, 0.0, 5.0]).unwrap(), 1.0);
    }

    #[test]
    fn ks_handles_ties_across_samples() {
        let a = WeightedSample::uniform(vec![0.0, 1.0]).unwrap();
        let b = WeightedSample::uniform(vec![1.0, 1.0]).unwrap();
        assert_eq!(ks_distance(&a, &b), 0.5);
        let c = WeightedSample::new(vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 2.0]).unwrap();
        assert_eq!(ks_distance(&a, &c), 0.0);
    }

    #[test]
    fn independent_normal_samples_are_close() {
        let draw = |stream| -> Vec<f64> {
            let mut rng = Seed::with_stream(11, stream).rng();
            (0..100_000).map(|_| rng.sample(StandardNormal)).collect()
        };
        let a = WeightedSample::uniform(draw(0)).unwrap();
        let b = WeightedSample::uniform(draw(1)).unwrap();
        assert!(ks_distance(&a, &b) <= 0.02);
    }

    #[test]
    fn ks_against_cdf_checks_left_limits() {
        let s = WeightedSample::uniform(vec![0.5]).unwrap();
        // Uniform(0,1) cdf: at 0.5 the ECDF jumps 0 → 1, both sides 0.5 away.
        assert_eq!(ks_against_cdf(&s, |x| x.clamp(0.0, 1.0)), 0.5);
    }

    #[test]
    fn ks_against_cdf_shrinks_at_root_n_rate() {
        let normal_cdf = |x: f64| 0.5 * libm::erfc(-x / 2f64.sqrt());
        let mean_ks = |n: usize| {
            let reps = 200;
            let total: f64 = (0..reps)
                .map(|r| {
                    let mut rng = Seed::with_stream(5, (n * 1000 + r) as u64).rng();
                    let v = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                    ks_against_cdf(&WeightedSample::uniform(v).unwrap(), normal_cdf)
                })
                .sum();
            total / reps as f64
        };
        let ratio = mean_ks(1000) / mean_ks(4000);
        assert!((1.5..=3.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn modulus_examples() {
        let g = TimeGrid::unit(1000).unwrap();
        let flat = Path::new(g, vec![0.0; 1001]).unwrap();
        assert_eq!(modulus_of_continuity(&flat, 0.1).unwrap(), 0.0);
        let line = Path::new(g, g.times().collect()).unwrap();
        let w = modulus_of_continuity(&line, 0.1).unwrap();
        assert!((w - 0.1).abs() <= g.dt() + 1e-12, "w={w}");
        assert!(w < 0.1);
        assert!(modulus_of_continuity(&line, 0.0).is_err());
    }

    #[test]
    fn bootstrap_ci_brackets_the_mean() {
        let mut rng = Seed::new(3).rng();
        let v: Vec<f64> = (0..5000).map(|_| rng.sample(StandardNormal)).collect();
        let s = WeightedSample::uniform(v).unwrap();
        let ci = bootstrap_ci(&[&s], 400, 0.95, Seed::new(4), |x| x[0].mean()).unwrap();
        assert!(ci.low < s.mean() && s.mean() < ci.high);
        assert!(ci.half_width() < 0.05);
    }

    fn sample_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        prop::collection::vec((-5.0f64..5.0, 0.0f64..3.0), 1..40)
            .prop_filter("positive mass", |v| v.iter().any(|(_, w)| *w > 1e-3))
            .prop_map(|v| v.into_iter().unzip())
    }

    proptest! {
        #[test]
        fn ks_is_a_bounded_symmetric_metric((va, wa) in sample_strategy(), (vb, wb) in sample_strategy()) {
            let a = WeightedSample::new(va, wa).unwrap();
            let b = WeightedSample::new(vb, wb).unwrap();
            let d = ks_distance(&a, &b);
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, ks_distance(&b, &a));
            prop_assert_eq!(ks_distance(&a, &a), 0.0);
            prop_assert!(wasserstein1(&a, &b) >= 0.0);
        }

        #[test]
        fn statistics_ignore_weight_scale((va, wa) in sample_strategy(), (vb, wb) in sample_strategy(), c in 1e-3f64..1e3) {
            let a = WeightedSample::new(va.clone(), wa.clone()).unwrap();
            let b = WeightedSample::new(vb.clone(), wb.clone()).unwrap();
            let a2 = WeightedSample::new(va, wa.iter().map(|w| w * c).collect()).unwrap();
            let b2 = WeightedSample::new(vb, wb.iter().map(|w| w * c).collect()).unwrap();
            prop_assert!((ks_distance(&a, &b) - ks_distance(&a2, &b2)).abs() <= 1e-12);
            prop_assert!((wasserstein1(&a, &b) - wasserstein1(&a2, &b2)).abs() <= 1e-12);
            prop_assert!((a.mean() - a2.mean()).abs() <= 1e-12);
            prop_assert!((a.ess() - a2.ess()).abs() <= 1e-9);
        }

        #[test]
        fn sliding_window_matches_brute_force(v in prop::collection::vec(-3.0f64..3.0, 1..60), span in 0usize..12) {
            prop_assert_eq!(max_window_range(&v, span), brute_window_range(&v, span));
        }

        #[test]
        fn ecdf_is_monotone_in_unit_range((va, wa) in sample_strategy(), xs in prop::collection::vec(-6.0f64..6.0, 2..20)) {
            let s = WeightedSample::new(va, wa).unwrap();
            let mut xs = xs;
            xs.sort_by(f64::total_cmp);
            let f = s.ecdf();
            let ys: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
            prop_assert!(ys.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(ys.iter().all(|y| (0.0..=1.0).contains(y)));
        }
    }
}
