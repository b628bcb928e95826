use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{drift_bessel, drift_meander, drift_penalized};
use crate::error::{Error, Result};
use crate::gaussgen::{Path, TimeGrid};
use crate::rng::{par_map_streams, Seed};

const MAX_RESAMPLES: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DriftKind {
    /// `c(t, X − M_X)`, the penalized limit process.
    Penalized,
    /// `c^{(me)}(t, X)`, the Brownian meander.
    Meander,
    /// `1/(X + 1)`, Bessel(3) started at 1 and shifted to the origin.
    Bessel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub kind: DriftKind,
    pub start: f64,
}

impl DriftSpec {
    pub fn new(kind: DriftKind, start: f64) -> Result<Self> {
        let ok = match kind {
            DriftKind::Meander => start > 0.0,
            DriftKind::Bessel => start >= 0.0,
            DriftKind::Penalized => start.is_finite(),
        };
        if !ok || !start.is_finite() {
            return Err(Error::param(
                "start",
                format!("{start} is not a valid start for {kind:?}"),
            ));
        }
        Ok(DriftSpec { kind, start })
    }

    /// Meander starts at `√dt`; the other two at the origin.
    pub fn with_default_start(kind: DriftKind, n_steps: usize) -> Self {
        let start = match kind {
            DriftKind::Meander => (1.0 / n_steps as f64).sqrt(),
            _ => 0.0,
        };
        DriftSpec { kind, start }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub x1: f64,
    pub min: f64,
    /// Gaussian increments redrawn by the positivity guard.
    pub rejections: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerOutput {
    pub paths: Vec<Path>,
    pub step_rejections: u64,
}

/// Integrate one trajectory on `[0, 1]`, reporting every state to `visit`.
fn integrate<R: Rng + ?Sized>(
    spec: DriftSpec,
    n_steps: usize,
    zero_noise: bool,
    rng: &mut R,
    mut visit: impl FnMut(usize, f64),
) -> u32 {
    let dt = 1.0 / n_steps as f64;
    let sd = dt.sqrt();
    let t_cap = 1.0 - dt;
    let mut x = spec.start;
    let mut run_min = x;
    let mut rejections = 0;
    visit(0, x);
    for i in 0..n_steps {
        let t = (i as f64 * dt).min(t_cap);
        let drift = match spec.kind {
            DriftKind::Penalized => drift_penalized(t, x - run_min),
            DriftKind::Meander => drift_meander(t, x),
            DriftKind::Bessel => drift_bessel(x + 1.0),
        };
        let mean = x + drift * dt;
        let next = if zero_noise {
            mean
        } else {
            // Positivity guard: meander stays above 0, Bessel above −1.
            let floor = match spec.kind {
                DriftKind::Penalized => f64::NEG_INFINITY,
                DriftKind::Meander => 0.0,
                DriftKind::Bessel => -1.0,
            };
            let mut proposal = mean + sd * rng.sample::<f64, _>(StandardNormal);
            let mut tries = 0;
            while proposal <= floor && tries < MAX_RESAMPLES {
                rejections += 1;
                tries += 1;
                proposal = mean + sd * rng.sample::<f64, _>(StandardNormal);
            }
            if proposal <= floor {
                proposal = 2.0 * floor - proposal;
            }
            proposal
        };
        x = next;
        run_min = run_min.min(x);
        visit(i + 1, x);
    }
    rejections
}

/// Euler–Maruyama trajectories on a grid of `n_steps` over `[0, 1]`.
pub fn euler_simulate(
    spec: DriftSpec,
    n_steps: usize,
    count: usize,
    seed: Seed,
    zero_noise: bool,
) -> Result<EulerOutput> {
    let grid = TimeGrid::unit(n_steps)?;
    let runs = par_map_streams(
        seed,
        count,
        || (),
        |_, _, rng| {
            let mut values = vec![0.0; n_steps + 1];
            let rej = integrate(spec, n_steps, zero_noise, rng, |i, x| values[i] = x);
            (Path { grid, values }, rej)
        },
    );
    let step_rejections = runs.iter().map(|(_, r)| *r as u64).sum();
    Ok(EulerOutput {
        paths: runs.into_iter().map(|(p, _)| p).collect(),
        step_rejections,
    })
}

/// Endpoint and running minimum only, without storing trajectories.
pub fn euler_endpoints(
    spec: DriftSpec,
    n_steps: usize,
    count: usize,
    seed: Seed,
    zero_noise: bool,
) -> Result<Vec<Endpoint>> {
    TimeGrid::unit(n_steps)?;
    Ok(par_map_streams(
        seed,
        count,
        || (),
        |_, _, rng| {
            let mut x1 = spec.start;
            let mut min = spec.start;
            let rejections = integrate(spec, n_steps, zero_noise, rng, |_, x| {
                x1 = x;
                min = min.min(x);
            });
            Endpoint { x1, min, rejections }
        },
    ))
}

/// Exact `X^{(be)}(1) = |(1, 0, 0) + W(1)| − 1` for a 3-dimensional Brownian `W`.
pub fn sample_bessel_endpoint_exact(count: usize, seed: Seed) -> Vec<f64> {
    par_map_streams(
        seed,
        count,
        || (),
        |_, _, rng| {
            let a: f64 = 1.0 + rng.sample::<f64, _>(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            let c: f64 = rng.sample(StandardNormal);
            (a * a + b * b + c * c).sqrt() - 1.0
        },
    )
}
