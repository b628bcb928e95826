//! Drift functions and diffusions of the Brownian case.
//!
//! Three drifts push a Brownian motion upward:
//!
//! * [`drift_penalized`]: `c(t, x) = (2Φ_{1−t}(x) − 1) / (x + 2∫_x^∞ (1 − Φ_{1−t}(s)) ds)`,
//!   evaluated at the distance `x = X(t) − min_{s≤t} X(s)` above the running minimum.
//! * [`drift_meander`]: `exp(−x²/2(1−t)) / ∫_0^x exp(−y²/2(1−t)) dy`, the Brownian meander.
//! * [`drift_bessel`]: `1/y`, the three-dimensional Bessel process.
//!
//! The remaining functions are the Brownian identities that tie the penalized
//! drift to the limit law: the conditional expectation of `B(1) − M(1)`, the
//! stochastic-integral representation of `M(1)`, and the meander transition
//! density with its space-time harmonic function.

mod euler;

pub use euler::{
    euler_endpoints, euler_simulate, sample_bessel_endpoint_exact, DriftKind, DriftSpec, Endpoint,
    EulerOutput,
};

use libm::{erf, erfc};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::gaussgen::Path;

/// `√(2/π)`, the mean of `|N(0,1)|` and of `−min_{[0,1]} B`.
pub const E_NEG_MIN_BROWNIAN: f64 = 0.797_884_560_802_865_4;

/// Centred normal law with a fixed variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    variance: f64,
}

impl GaussianKernel {
    pub fn new(variance: f64) -> Result<Self> {
        if variance > 0.0 && variance.is_finite() {
            Ok(GaussianKernel { variance })
        } else {
            Err(Error::param("variance", format!("must be positive, got {variance}")))
        }
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn cdf(&self, x: f64) -> f64 {
        normal_cdf(self.variance, x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        normal_pdf(self.variance, x)
    }
}

/// `Φ_v(x)`. A zero variance gives the degenerate limit (`½` at the origin).
pub fn normal_cdf(variance: f64, x: f64) -> f64 {
    if variance == 0.0 {
        return if x > 0.0 {
            1.0
        } else if x < 0.0 {
            0.0
        } else {
            0.5
        };
    }
    0.5 * erfc(-x / (2.0 * variance).sqrt())
}

pub fn normal_pdf(variance: f64, x: f64) -> f64 {
    (-x * x / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
}

/// `2Φ_v(x) − 1`, computed without cancellation near zero.
fn centered_cdf(variance: f64, x: f64) -> f64 {
    if variance == 0.0 {
        return if x == 0.0 { 0.0 } else { x.signum() };
    }
    erf(x / (2.0 * variance).sqrt())
}

/// `∫_x^∞ (1 − Φ_{1−t}(s)) ds = σφ(x/σ) − x(1 − Φ(x/σ))`, `σ = √(1−t)`.
pub fn tail_integral(t: f64, x: f64) -> f64 {
    if t >= 1.0 {
        return 0.0;
    }
    let sigma = (1.0 - t).sqrt();
    let z = x / sigma;
    let survival = 0.5 * erfc(z / SQRT_2);
    sigma * normal_pdf(1.0, z) - x * survival
}

/// Drift of the penalized limit process at distance `x ≥ 0` above its running
/// minimum. At `t ≥ 1` this is the limit `1/x`.
pub fn drift_penalized(t: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0 / x;
    }
    centered_cdf(1.0 - t, x) / (x + 2.0 * tail_integral(t, x))
}

/// Brownian meander drift; `+∞` at `x ≤ 0`, where it diverges like `1/x`.
pub fn drift_meander(t: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let v = 1.0 - t;
    let u = x / (2.0 * v).sqrt();
    (-u * u).exp() / meander_normalizer(v, x)
}

/// `∫_0^x exp(−y²/2v) dy = √(2πv)(Φ_v(x) − ½)`.
pub fn meander_normalizer(v: f64, x: f64) -> f64 {
    (PI * v / 2.0).sqrt() * erf(x / (2.0 * v).sqrt())
}

/// Bessel(3) drift `1/y`, independent of time.
pub fn drift_bessel(y: f64) -> f64 {
    1.0 / y
}

/// Evaluate a drift on a `(t, x)` lattice, row-major in `t`.
pub fn drift_table(kind: DriftKind, ts: &[f64], xs: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(ts.len() * xs.len());
    for &t in ts {
        for &x in xs {
            let c = match kind {
                DriftKind::Penalized => drift_penalized(t, x),
                DriftKind::Meander => drift_meander(t, x),
                DriftKind::Bessel => drift_bessel(x),
            };
            out.push((t, x, c));
        }
    }
    out
}

/// Meander transition density from `x` at time `t` to `y` at time `t + s`.
pub fn meander_transition_density(t: f64, x: f64, s: f64, y: f64) -> Result<f64> {
    if !(t >= 0.0 && s > 0.0 && t + s <= 1.0 + 1e-12 && x > 0.0) {
        return Err(Error::DomainViolation(format!(
            "meander transition needs t ≥ 0, s > 0, t + s ≤ 1, x > 0; got t={t} s={s} x={x}"
        )));
    }
    if y <= 0.0 {
        return Ok(0.0);
    }
    let remaining = (1.0 - t - s).max(0.0);
    let kill = normal_pdf(s, y - x) - normal_pdf(s, y + x);
    Ok((kill * centered_cdf(remaining, y) / centered_cdf(1.0 - t, x)).max(0.0))
}

/// `h(t, x) = P_x(B stays positive on [0, 1−t]) = 2Φ_{1−t}(x) − 1`.
pub fn h_harmonic(t: f64, x: f64) -> f64 {
    centered_cdf((1.0 - t).max(0.0), x)
}

/// `E[B(1) − M(1) | B(t) = b, M(t) = m] = (b − m) + 2∫_{b−m}^∞ (1 − Φ_{1−t}(s)) ds`.
pub fn cond_expect_endpoint_gap(t: f64, b: f64, m: f64) -> Result<f64> {
    if m > b {
        return Err(Error::DomainViolation(format!(
            "running minimum {m} exceeds current value {b}"
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::DomainViolation(format!("t = {t} outside [0, 1]")));
    }
    let gap = b - m;
    Ok(gap + 2.0 * tail_integral(t, gap))
}

/// Density process `Z(s) = E[dQ/dP | F_s]` at gap `b − m`.
pub fn density_process(s: f64, gap: f64) -> f64 {
    (gap + 2.0 * tail_integral(s, gap)) / E_NEG_MIN_BROWNIAN
}

/// Integrand `(2Φ_{1−s}(gap) − 1) / E[−M(1)]` of the martingale `Z`, which
/// equals `Z(s) · c(s, gap)`.
pub fn martingale_integrand(s: f64, gap: f64) -> f64 {
    centered_cdf(1.0 - s, gap) / E_NEG_MIN_BROWNIAN
}

/// `M(1) − [E M(1) − 2 Σ (Φ_{1−t_i}(B_i − M_i) − 1)(B_{i+1} − B_i)]` with
/// left-point (Itô) evaluation on the path's grid.
pub fn shiryaev_residual(path: &Path, expected_min: f64) -> f64 {
    let v = &path.values;
    let n = path.grid.n_steps();
    let mut run_min = v[0];
    let mut integral = 0.0;
    for i in 0..n {
        let t = path.grid.time(i);
        let phi = normal_cdf(1.0 - t, v[i] - run_min);
        integral += -2.0 * (phi - 1.0) * (v[i + 1] - v[i]);
        run_min = run_min.min(v[i + 1]);
    }
    run_min - (expected_min + integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_examples() {
        assert_eq!(normal_cdf(1.0, 0.0), 0.5);
        assert_abs_diff_eq!(normal_cdf(1.0, 1.0), 0.841_344_746_068_543, epsilon = 1e-12);
        assert_abs_diff_eq!(normal_pdf(1.0, 0.0), 0.398_942_280_401_432_7, epsilon = 1e-15);
        assert!(GaussianKernel::new(0.0).is_err());
        let k = GaussianKernel::new(4.0).unwrap();
        assert_abs_diff_eq!(k.cdf(2.0), normal_cdf(1.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn normal_cdf_tails_keep_relative_accuracy() {
        // Φ(−10) = 7.619853024160527e−24; the symmetric erfc form keeps all digits.
        let p = normal_cdf(1.0, -10.0);
        assert!(((p - 7.619_853_024_160_527e-24) / p).abs() < 1e-12);
        assert!(normal_cdf(1.0, -37.0) > 0.0);
    }

    #[test]
    fn tail_integral_examples() {
        assert_abs_diff_eq!(tail_integral(0.0, 0.0), 0.398_942_280_401_432_7, epsilon = 1e-14);
        // φ(1) − (1 − Φ(1))
        assert_abs_diff_eq!(
            tail_integral(0.0, 1.0),
            0.241_970_724_519_143_37 - 0.158_655_253_931_457_05,
            epsilon = 1e-14
        );
        let mut prev = f64::INFINITY;
        for k in 0..60 {
            let v = tail_integral(0.3, k as f64 * 0.25);
            assert!(v <= prev && v >= 0.0);
            prev = v;
        }
        assert_eq!(tail_integral(1.0, 0.3), 0.0);
    }

    #[test]
    fn penalized_drift_examples() {
        assert_eq!(drift_penalized(0.4, 0.0), 0.0);
        // (2Φ(1) − 1) / (1 + 2(φ(1) − (1 − Φ(1))))
        let den = 1.0 + 2.0 * (0.241_970_724_519_143_37 - 0.158_655_253_931_457_05);
        assert_abs_diff_eq!(drift_penalized(0.0, 1.0), 0.682_689_492_137_086 / den, epsilon = 1e-12);
        assert!((50.0 * drift_penalized(0.5, 50.0) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn meander_drift_examples() {
        assert_abs_diff_eq!(drift_meander(0.0, 1.0), 0.606_530_659_712_633 / 0.855_624_391_892_149, epsilon = 1e-12);
        assert!((1e-4 * drift_meander(0.3, 1e-4) - 1.0).abs() < 1e-4);
        for x in [2.0, 5.0, 10.0, 20.0, 30.0] {
            let log_ratio = drift_meander(0.0, x).ln() + x * x / 2.0;
            assert!(log_ratio.abs() < 2.0, "x={x} log ratio {log_ratio}");
        }
    }

    #[test]
    fn bessel_drift_is_time_free() {
        assert_eq!(drift_bessel(2.0), 0.5);
        assert_eq!(drift_bessel(1.0), 1.0);
        let table = drift_table(DriftKind::Bessel, &[0.0, 0.5, 0.9], &[2.0]);
        assert!(table.iter().all(|(_, _, c)| *c == 0.5));
    }

    #[test]
    fn drift_asymptotics() {
        for t in [0.0, 0.5, 0.9] {
            assert!(drift_penalized(t, 1e-6) <= 1e-5);
            assert!((50.0 * drift_penalized(t, 50.0) - 1.0).abs() <= 1e-2);
        }
        assert!((drift_penalized(0.999, 1.0) - 1.0).abs() <= 1e-2);
    }

    #[test]
    fn drift_monotonicity_in_time() {
        for x in [0.05, 0.3, 1.0, 2.5, 6.0] {
            let ts: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
            let pen: Vec<f64> = ts.iter().map(|&t| drift_penalized(t, x)).collect();
            let mea: Vec<f64> = ts.iter().map(|&t| drift_meander(t, x)).collect();
            assert!(pen.windows(2).all(|w| w[1] >= w[0] - 1e-15), "x={x}");
            assert!(mea.windows(2).all(|w| w[1] <= w[0] + 1e-15), "x={x}");
        }
    }

    #[test]
    fn harmonic_function_examples() {
        assert_eq!(h_harmonic(0.3, 0.0), 0.0);
        assert_abs_diff_eq!(h_harmonic(0.0, 1.0), 0.682_689_492_137_086, epsilon = 1e-12);
        assert_eq!(h_harmonic(1.0, 0.2), 1.0);
    }

    #[test]
    fn transition_density_edges() {
        assert_eq!(meander_transition_density(0.2, 0.5, 0.3, 0.0).unwrap(), 0.0);
        assert!(meander_transition_density(0.2, 0.5, 0.3, 1e-9).unwrap() < 1e-7);
        assert!(meander_transition_density(0.5, 0.5, 0.6, 1.0).is_err());
        assert!(meander_transition_density(0.2, 0.0, 0.3, 1.0).is_err());
        // t + s = 1 uses the degenerate limit Φ_0(y) = 1.
        assert!(meander_transition_density(0.4, 0.5, 0.6, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn conditional_gap_examples() {
        assert_abs_diff_eq!(cond_expect_endpoint_gap(0.0, 0.0, 0.0).unwrap(), E_NEG_MIN_BROWNIAN, epsilon = 1e-14);
        let far = cond_expect_endpoint_gap(0.2, 40.0, 0.0).unwrap();
        assert_abs_diff_eq!(far, 40.0, epsilon = 1e-12);
        assert!(cond_expect_endpoint_gap(0.2, 0.0, 0.1).is_err());
    }

    #[test]
    fn density_times_drift_is_the_integrand() {
        for i in 0..50 {
            let s = i as f64 / 50.0;
            for j in 0..50 {
                let gap = j as f64 * 0.1;
                let lhs = density_process(s, gap) * drift_penalized(s, gap);
                assert!((lhs - martingale_integrand(s, gap)).abs() <= 1e-10);
            }
        }
    }
}
