//! Fractional Brownian motion on uniform grids.
//!
//! Covariance `½(t^{2H} + s^{2H} − |t − s|^{2H})`, exact samplers (dense
//! Cholesky and circulant embedding of the increments), and the pathwise
//! transforms used by the weighting code: time reversal, running extrema and
//! self-similar rescaling.

mod sampler;

pub use sampler::{
    sample_fbm_auto, sample_fbm_cholesky, sample_fbm_circulant, FbmGenerator, Method, Scratch,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h < 1.0 {
            Ok(HurstParam(h))
        } else {
            Err(Error::param("hurst", format!("must lie in (0, 1), got {h}")))
        }
    }

    /// Standard Brownian motion.
    pub fn brownian() -> Self {
        HurstParam(0.5)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_brownian(self) -> bool {
        self.0 == 0.5
    }
}

impl TryFrom<f64> for HurstParam {
    type Error = Error;
    fn try_from(h: f64) -> Result<Self> {
        HurstParam::new(h)
    }
}

impl From<HurstParam> for f64 {
    fn from(h: HurstParam) -> f64 {
        h.0
    }
}

/// Uniform grid `t_i = i · horizon / n_steps`, `i = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::param("horizon", format!("must be positive, got {horizon}")));
        }
        if n_steps == 0 {
            return Err(Error::param("n_steps", "must be at least 1"));
        }
        Ok(TimeGrid { horizon, n_steps })
    }

    pub fn unit(n_steps: usize) -> Result<Self> {
        TimeGrid::new(1.0, n_steps)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            self.horizon * i as f64 / self.n_steps as f64
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|i| self.time(i))
    }

    /// Index of the grid point nearest to fraction `u ∈ [0, 1]` of the horizon.
    pub fn index_at_fraction(&self, u: f64) -> usize {
        ((u.clamp(0.0, 1.0) * self.n_steps as f64).round() as usize).min(self.n_steps)
    }
}

/// A trajectory sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl Path {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(
                "values",
                format!("expected {} samples, got {}", grid.len(), values.len()),
            ));
        }
        Ok(Path { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Path {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("paths have at least two samples")
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at fraction `u` of the horizon (nearest grid point).
    pub fn at_fraction(&self, u: f64) -> f64 {
        self.values[self.grid.index_at_fraction(u)]
    }
}

pub fn fbm_covariance(h: HurstParam, s: f64, t: f64) -> f64 {
    let two_h = 2.0 * h.value();
    0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h))
}

/// Autocovariance of unit-spaced fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(h: HurstParam, k: usize) -> f64 {
    let two_h = 2.0 * h.value();
    let k = k as f64;
    if k == 0.0 {
        return 1.0;
    }
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).powf(two_h))
}

/// Covariance of `(B_H(t_1), …, B_H(t_n))`; time 0 is excluded.
pub fn build_cov_matrix(h: HurstParam, grid: &TimeGrid) -> DMatrix<f64> {
    let n = grid.n_steps();
    DMatrix::from_fn(n, n, |i, j| fbm_covariance(h, grid.time(i + 1), grid.time(j + 1)))
}

/// Covariance of the time-reversed process `B(T) − B(T − s)` at `(s, t)`,
/// expanded through the forward covariance.
pub fn time_reversed_covariance(h: HurstParam, horizon: f64, s: f64, t: f64) -> f64 {
    let k = |a: f64, b: f64| fbm_covariance(h, a, b);
    k(horizon, horizon) - k(horizon, horizon - t) - k(horizon - s, horizon)
        + k(horizon - s, horizon - t)
}

/// `t ↦ B(T) − B(T − t)` on the same grid.
pub fn time_reverse(path: &Path) -> Path {
    let n = path.grid.n_steps();
    let end = path.values[n];
    let values = (0..=n).map(|i| end - path.values[n - i]).collect();
    Path {
        grid: path.grid,
        values,
    }
}

pub fn running_min(path: &Path) -> Path {
    scan(path, f64::min)
}

pub fn running_max(path: &Path) -> Path {
    scan(path, f64::max)
}

fn scan(path: &Path, op: fn(f64, f64) -> f64) -> Path {
    let mut acc = path.values[0];
    let values = path
        .values
        .iter()
        .map(|&v| {
            acc = op(acc, v);
            acc
        })
        .collect();
    Path {
        grid: path.grid,
        values,
    }
}

/// Self-similar rescaling `t ↦ T^{−H} B(T t)` onto the unit interval.
pub fn rescale(path: &Path, horizon: f64, h: HurstParam) -> Path {
    let scale = horizon.powf(-h.value());
    Path {
        grid: TimeGrid {
            horizon: 1.0,
            n_steps: path.grid.n_steps(),
        },
        values: path.values.iter().map(|v| v * scale).collect(),
    }
}

/// Draw the minimum of a Brownian bridge from `a` to `b` over a step of
/// variance `dt`, given a uniform `u ∈ (0, 1)`.
pub fn brownian_bridge_min(a: f64, b: f64, dt: f64, u: f64) -> f64 {
    let d = b - a;
    0.5 * (a + b - (d * d - 2.0 * dt * u.ln()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    #[test]
    fn hurst_domain() {
        assert!(HurstParam::new(0.0).is_err());
        assert!(HurstParam::new(1.0).is_err());
        assert!(HurstParam::new(f64::NAN).is_err());
        assert!(HurstParam::new(0.3).is_ok());
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = TimeGrid::new(3.7, 7).unwrap();
        assert_eq!(g.time(0), 0.0);
        assert_eq!(g.time(7), 3.7);
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn covariance_examples() {
        for hv in [0.2, 0.5, 0.9] {
            assert_abs_diff_eq!(fbm_covariance(h(hv), 1.0, 1.0), 1.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(fbm_covariance(h(0.5), 0.3, 0.7), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(fbm_covariance(h(0.75), 1.0, 2.0), 2f64.sqrt(), epsilon = 1e-12);
        assert_eq!(
            fbm_covariance(h(0.3), 0.2, 0.9),
            fbm_covariance(h(0.3), 0.9, 0.2)
        );
    }

    #[test]
    fn cov_matrix_examples() {
        let m = build_cov_matrix(h(0.5), &TimeGrid::unit(2).unwrap());
        assert_eq!(m.as_slice(), &[0.5, 0.5, 0.5, 1.0]);

        let m = build_cov_matrix(h(0.75), &TimeGrid::new(2.0, 2).unwrap());
        assert_abs_diff_eq!(m[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[(0, 1)], 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(m[(1, 1)], 2f64.powf(1.5), epsilon = 1e-14);

        let g = TimeGrid::new(2.5, 9).unwrap();
        let m = build_cov_matrix(h(0.5), &g);
        for i in 0..9 {
            for j in 0..9 {
                assert_abs_diff_eq!(m[(i, j)], g.time(i + 1).min(g.time(j + 1)), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn reversed_covariance_matches_forward() {
        for hv in [0.25, 0.5, 0.75] {
            let g = TimeGrid::unit(64).unwrap();
            for i in 0..=64 {
                for j in 0..=64 {
                    let (s, t) = (g.time(i), g.time(j));
                    let diff = time_reversed_covariance(h(hv), 1.0, s, t) - fbm_covariance(h(hv), s, t);
                    assert!(diff.abs() <= 1e-12, "H={hv} s={s} t={t} diff={diff}");
                }
            }
        }
    }

    #[test]
    fn time_reverse_examples() {
        let g = TimeGrid::unit(2).unwrap();
        let p = Path::new(g, vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(time_reverse(&p).values, vec![0.0, 2.0, 3.0]);
        assert_eq!(time_reverse(&Path::zeros(g)), Path::zeros(g));
    }

    #[test]
    fn running_extrema_and_rescale() {
        let g = TimeGrid::unit(3).unwrap();
        let p = Path::new(g, vec![0.0, 1.0, -1.0, 2.0]).unwrap();
        assert_eq!(running_min(&p).values, vec![0.0, 0.0, -1.0, -1.0]);
        assert_eq!(running_max(&p).values, vec![0.0, 1.0, 1.0, 2.0]);
        assert_eq!(running_max(&Path::zeros(g)), Path::zeros(g));

        let g4 = TimeGrid::new(4.0, 2).unwrap();
        let q = Path::new(g4, vec![0.0, 2.0, -6.0]).unwrap();
        let r = rescale(&q, 4.0, h(0.5));
        assert_eq!(r.values, vec![0.0, 1.0, -3.0]);
        assert_eq!(r.grid.horizon(), 1.0);
    }

    #[test]
    fn bridge_min_is_below_both_ends() {
        for &u in &[1e-9, 0.3, 0.999_999] {
            let m = brownian_bridge_min(0.4, -0.1, 0.01, u);
            assert!(m <= -0.1);
        }
    }
}
