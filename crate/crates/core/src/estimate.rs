//! Monte Carlo estimates and order-stable accumulation.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated sum, evaluated in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub stderr: f64,
    pub count: usize,
}

impl EstimateWithError {
    /// Sample mean and standard error of the mean.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return EstimateWithError {
                value: f64::NAN,
                stderr: f64::NAN,
                count: 0,
            };
        }
        let mean = compensated_sum(samples.iter().copied()) / n as f64;
        let stderr = if n > 1 {
            let ss = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean)));
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            f64::NAN
        };
        EstimateWithError {
            value: mean,
            stderr,
            count: n,
        }
    }

    /// Estimate of a Bernoulli probability from a success count.
    pub fn proportion(successes: usize, trials: usize) -> Self {
        let p = successes as f64 / trials as f64;
        EstimateWithError {
            value: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            count: trials,
        }
    }

    /// `|value - target| <= k * stderr`
    pub fn within_sigma(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }

    pub fn relative_error(&self, target: f64) -> f64 {
        ((self.value - target) / target).abs()
    }
}

/// Effective sample size `(Σw)² / Σw²`.
pub fn ess(weights: &[f64]) -> f64 {
    let s = compensated_sum(weights.iter().copied());
    let s2 = compensated_sum(weights.iter().map(|w| w * w));
    if s2 == 0.0 {
        0.0
    } else {
        s * s / s2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = EstimateWithError::from_samples(&[2.0; 10]);
        assert_eq!(e.value, 2.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn ess_extremes() {
        assert!((ess(&[0.25; 40]) - 40.0).abs() < 1e-12);
        assert_eq!(ess(&[0.0, 3.0, 0.0]), 1.0);
    }
}
